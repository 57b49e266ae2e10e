"""Interacting-particle discretization of mean-field two-timescale GDA.

N particle pairs (X_i, Y_i) follow Euler-Maruyama steps of the Langevin
system in which each particle descends the mean of grad_x K against the
opponent's empirical measure and ascends (at rate eta) the mean of grad_y K
against its own side's empirical measure:

    X_i <- X_i - dt mean_j grad_x K(X_i, Y_j) + sqrt(2 dt / beta) xi_i,
    Y_i <- Y_i + dt eta mean_j grad_y K(X_j, Y_i) + sqrt(2 eta dt / beta) zeta_i.

Noise comes from counter-based streams (Philox keyed by seed with the step
and role in the counter), so results are bit-identical for a fixed seed no
matter how the work is scheduled.

The module also provides the mixed reflection-synchronous coupling of two
such systems (reflected noise across the difference direction at large
separation, shared noise near coincidence, blended by the Lipschitz ramp
rc(r) = clamp(2r/delta - 1, 0, 1)), a Monte Carlo estimator of the radial
convexity profile kappa(r), the damped fixed-point solver for the
entropy-regularized equilibrium on grids, exact/assignment-based
Wasserstein-1 distances, and the end-to-end contraction experiment that
fits the decay rate of the coupled distance E[f1(|Z|) + gamma f2(|Q|)].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable, Sequence

import numpy as np
import scipy.optimize
import scipy.sparse
import scipy.spatial.distance

from .errors import (
    ConstructionError,
    ContractViolation,
    DimensionError,
    DivergenceError,
    NumericalError,
    StepSizeError,
)
from . import rates

__all__ = [
    "KernelGeometry",
    "GameKernel",
    "ParticleSystem",
    "CoupledPair",
    "GridMeasurePair",
    "ProfileSamples",
    "ContractionParams",
    "ContractionReport",
    "make_benchmark_kernel",
    "step_particles",
    "make_coupled_pair",
    "coupled_step",
    "rc_weight",
    "kappa_profile",
    "mne_fixed_point",
    "wasserstein1",
    "contraction_experiment",
]

# Noise roles inside the per-step counter block.
ROLE_X_REFLECT = 0
ROLE_X_SYNC = 1
ROLE_Y_REFLECT = 2
ROLE_Y_SYNC = 3
ROLE_INIT_X = 8
ROLE_INIT_Y = 9

RNG_IDENTIFIER = "numpy-philox4x64(key=seed, counter=[0,0,step,role])"


def counter_normals(seed: int, step: int, role: int, shape) -> np.ndarray:
    """Standard normals from the (seed, step, role) counter block.

    Particle and coordinate indices address positions inside the returned
    array; the draw is a single vectorized call, so the values never depend
    on thread count or evaluation order.
    """
    bitgen = np.random.Philox(
        key=np.uint64(seed), counter=[0, 0, np.uint64(step), np.uint64(role)]
    )
    return np.random.Generator(bitgen).standard_normal(shape)


@dataclass(frozen=True)
class KernelGeometry:
    """Declared convexity/Lipschitz constants of a min-max kernel.

    kappa_x, kappa_y: strong convexity (resp. concavity) constants valid at
    separations >= R; m_x, m_y: bounds on the nonconvexity inside R;
    L_X, L_Y: cross-Lipschitz constants of grad_x in y and grad_y in x;
    l_X, l_Y: own-variable gradient Lipschitz constants.
    """

    kappa_x: float
    kappa_y: float
    m_x: float
    m_y: float
    R: float
    L_X: float
    L_Y: float
    l_X: float
    l_Y: float


@dataclass(frozen=True)
class GameKernel:
    """A min-max objective with analytic gradients and declared geometry.

    mean_grad_x(X, Y) must return the exact empirical-mean gradient
    mean_j grad_x K(X_i, Y_j) row-wise (and symmetrically for mean_grad_y);
    when absent, a generic O(N M) fallback is used. evaluate_grid, when
    provided, vectorizes evaluate over an outer product of point lists.
    """

    dim_x: int
    dim_y: int
    evaluate: Callable[[np.ndarray, np.ndarray], float]
    grad_x: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_y: Callable[[np.ndarray, np.ndarray], np.ndarray]
    geometry: KernelGeometry
    mean_grad_x: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    mean_grad_y: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    evaluate_grid: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None


def make_benchmark_kernel(
    kappa_x: float,
    kappa_y: float,
    a: float,
    eps_nc: float,
    omega: float,
    *,
    dim: int = 1,
) -> GameKernel:
    """Benchmark kernel (kappa_x/2)|x|^2 + a x.y - (kappa_y/2)|y|^2 + eps_nc (cos(w x_1) - cos(w y_1)).

    Requires eps_nc w^2 < min(kappa_x, kappa_y) so the oscillation never
    destroys convexity-concavity; the geometry constants are analytic:
    L_X = L_Y = a, l = kappa + eps_nc w^2, R = 4 eps_nc w / kappa_side, and
    the outside-R convexity is the sharp bound kappa - eps_nc w min(w R, 2)/R.
    Both players share ``dim`` coordinates (the interaction is the dot product).
    """
    if kappa_x <= 0 or kappa_y <= 0:
        raise ConstructionError("kappa_x and kappa_y must be positive")
    if a < 0 or eps_nc < 0 or omega < 0:
        raise ConstructionError("a, eps_nc, omega must be nonnegative")
    if eps_nc > 0 and eps_nc * omega**2 >= min(kappa_x, kappa_y):
        raise ConstructionError(
            "eps_nc * omega^2 must stay below min(kappa_x, kappa_y); "
            f"got {eps_nc * omega**2:.3g} >= {min(kappa_x, kappa_y):.3g}"
        )

    if eps_nc == 0.0 or omega == 0.0:
        R = 0.0
        kx_out, ky_out = kappa_x, kappa_y
    else:
        R = max(4.0 * eps_nc * omega / kappa_x, 4.0 * eps_nc * omega / kappa_y)
        # sharp directional-convexity drop at separation R: eps_nc w min(wR, 2)/R
        drop = eps_nc * omega * min(omega * R, 2.0) / R
        kx_out = kappa_x - drop
        ky_out = kappa_y - drop

    geometry = KernelGeometry(
        kappa_x=kx_out,
        kappa_y=ky_out,
        m_x=max(0.0, eps_nc * omega**2 - kappa_x),
        m_y=max(0.0, eps_nc * omega**2 - kappa_y),
        R=R,
        L_X=a,
        L_Y=a,
        l_X=kappa_x + eps_nc * omega**2,
        l_Y=kappa_y + eps_nc * omega**2,
    )

    def evaluate(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (
            0.5 * kappa_x * np.sum(x * x, axis=-1)
            + a * np.sum(x * y, axis=-1)
            - 0.5 * kappa_y * np.sum(y * y, axis=-1)
            + eps_nc * (np.cos(omega * x[..., 0]) - np.cos(omega * y[..., 0]))
        )

    def grad_x(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        g = kappa_x * x + a * y
        g[..., 0] = g[..., 0] - eps_nc * omega * np.sin(omega * x[..., 0])
        return g

    def grad_y(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        g = a * x - kappa_y * y
        g[..., 0] = g[..., 0] + eps_nc * omega * np.sin(omega * y[..., 0])
        return g

    def mean_grad_x(X, Y):
        # grad_x is linear in y, so the empirical mean enters only through Y-bar
        X = np.asarray(X, dtype=float)
        ybar = np.mean(np.asarray(Y, dtype=float), axis=0)
        g = kappa_x * X + a * ybar
        g[:, 0] = g[:, 0] - eps_nc * omega * np.sin(omega * X[:, 0])
        return g

    def mean_grad_y(X, Y):
        Y = np.asarray(Y, dtype=float)
        xbar = np.mean(np.asarray(X, dtype=float), axis=0)
        g = a * xbar - kappa_y * Y
        g[:, 0] = g[:, 0] + eps_nc * omega * np.sin(omega * Y[:, 0])
        return g

    def evaluate_grid(xs, ys):
        xs = np.asarray(xs, dtype=float).reshape(len(xs), -1)
        ys = np.asarray(ys, dtype=float).reshape(len(ys), -1)
        quad = 0.5 * kappa_x * np.sum(xs**2, axis=1)[:, None] - 0.5 * kappa_y * np.sum(
            ys**2, axis=1
        )[None, :]
        inter = a * xs @ ys.T
        osc = eps_nc * (
            np.cos(omega * xs[:, 0])[:, None] - np.cos(omega * ys[:, 0])[None, :]
        )
        return quad + inter + osc

    return GameKernel(
        dim_x=dim,
        dim_y=dim,
        evaluate=evaluate,
        grad_x=grad_x,
        grad_y=grad_y,
        geometry=geometry,
        mean_grad_x=mean_grad_x,
        mean_grad_y=mean_grad_y,
        evaluate_grid=evaluate_grid,
    )


@dataclass(frozen=True)
class ParticleSystem:
    """N paired samples with inverse temperature beta and timescale ratio eta."""

    X: np.ndarray
    Y: np.ndarray
    beta: float
    eta: float
    t: float = 0.0
    step_count: int = 0

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float))
        Y = np.atleast_2d(np.asarray(self.Y, dtype=float))
        if X.shape[0] != Y.shape[0] or X.shape[0] < 1:
            raise ContractViolation("X and Y must hold the same positive particle count")
        if not (self.beta > 0):
            raise ContractViolation("beta must be positive (np.inf = zero temperature)")
        if not (self.eta > 0 and np.isfinite(self.eta)):
            raise ContractViolation("eta must be positive and finite")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ContractViolation("particle coordinates must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @property
    def n_particles(self) -> int:
        return self.X.shape[0]


def _mean_grads(kernel: GameKernel, X: np.ndarray, Y: np.ndarray):
    """Empirical-mean gradients for every particle (exact fast path if provided)."""
    if kernel.mean_grad_x is not None and kernel.mean_grad_y is not None:
        return kernel.mean_grad_x(X, Y), kernel.mean_grad_y(X, Y)
    N, M = X.shape[0], Y.shape[0]
    Gx = np.stack(
        [np.mean([kernel.grad_x(X[i], Y[j]) for j in range(M)], axis=0) for i in range(N)]
    )
    Gy = np.stack(
        [np.mean([kernel.grad_y(X[j], Y[i]) for j in range(N)], axis=0) for i in range(M)]
    )
    return Gx, Gy


def _step_arrays(
    kernel: GameKernel,
    X: np.ndarray,
    Y: np.ndarray,
    eta: float,
    dt: float,
    noise_x: np.ndarray,
    noise_y: np.ndarray,
):
    """One Euler-Maruyama update with externally supplied noise arrays."""
    Gx, Gy = _mean_grads(kernel, X, Y)
    return X - dt * Gx + noise_x, Y + dt * eta * Gy + noise_y


def _check_dt(kernel: GameKernel, eta: float, dt: float):
    if dt <= 0:
        raise ContractViolation("dt must be positive")
    if dt * eta * kernel.geometry.l_Y >= 0.5:
        raise StepSizeError(
            f"dt * eta * l_Y = {dt * eta * kernel.geometry.l_Y:.3g} >= 0.5; "
            "reduce the step for the fast variable"
        )


def step_particles(
    sys: ParticleSystem, kernel: GameKernel, dt: float, seed: int
) -> ParticleSystem:
    """Advance the particle system one Euler-Maruyama step."""
    _check_dt(kernel, sys.eta, dt)
    inv_beta = 0.0 if np.isinf(sys.beta) else 1.0 / sys.beta
    nx = math.sqrt(2.0 * inv_beta * dt) * counter_normals(
        seed, sys.step_count, ROLE_X_REFLECT, sys.X.shape
    )
    ny = math.sqrt(2.0 * sys.eta * inv_beta * dt) * counter_normals(
        seed, sys.step_count, ROLE_Y_REFLECT, sys.Y.shape
    )
    Xn, Yn = _step_arrays(kernel, sys.X, sys.Y, sys.eta, dt, nx, ny)
    if not (np.all(np.isfinite(Xn)) and np.all(np.isfinite(Yn))):
        raise DivergenceError(
            f"non-finite coordinate after step {sys.step_count}", step=sys.step_count
        )
    return replace(
        sys, X=Xn, Y=Yn, t=sys.t + dt, step_count=sys.step_count + 1
    )


def rc_weight(r: np.ndarray, delta: float) -> np.ndarray:
    """Reflection weight clamp(2r/delta - 1, 0, 1); 2/delta-Lipschitz ramp."""
    return np.clip(2.0 * np.asarray(r, dtype=float) / delta - 1.0, 0.0, 1.0)


def _unit_rows(V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row norms and unit rows of V; coincident rows get the first basis vector."""
    norms = np.linalg.norm(V, axis=1)
    E = np.zeros_like(V)
    nz = norms > 0
    E[nz] = V[nz] / norms[nz, None]
    E[~nz, 0] = 1.0
    return norms, E


@dataclass
class CoupledPair:
    """Two particle systems advanced in lockstep under the mixed coupling.

    distance_trace rows are (t, mean rho, mean |Z|, mean |Q|) with
    rho_i = f1(|Z_i|) + gamma f2(|Q_i|); f1/f2 default to the identity
    (the right metric when the geometry is globally convex-concave).
    """

    primary: ParticleSystem
    mirror: ParticleSystem
    delta: float
    gamma: float
    seed: int
    f1: Callable[[np.ndarray], np.ndarray] | None = None
    f2: Callable[[np.ndarray], np.ndarray] | None = None
    distance_trace: list = dc_field(default_factory=list)

    def trace_array(self) -> np.ndarray:
        return np.asarray(self.distance_trace, dtype=float)


def _record_distance(pair: CoupledPair):
    z = np.linalg.norm(pair.primary.X - pair.mirror.X, axis=1)
    q = np.linalg.norm(pair.primary.Y - pair.mirror.Y, axis=1)
    fz = z if pair.f1 is None else pair.f1(z)
    fq = q if pair.f2 is None else pair.f2(q)
    rho = float(np.mean(fz + pair.gamma * fq))
    pair.distance_trace.append((pair.primary.t, rho, float(z.mean()), float(q.mean())))


def make_coupled_pair(
    primary: ParticleSystem,
    mirror: ParticleSystem,
    *,
    delta: float,
    gamma: float,
    seed: int,
    f1=None,
    f2=None,
) -> CoupledPair:
    """Couple two systems; they must agree on N, beta, eta, and clock."""
    if primary.n_particles != mirror.n_particles:
        raise ContractViolation("coupled systems must share the particle count")
    if primary.beta != mirror.beta or primary.eta != mirror.eta:
        raise ContractViolation("coupled systems must share beta and eta")
    if primary.step_count != mirror.step_count:
        raise ContractViolation("coupled systems must share the step counter")
    if not (delta > 0 and gamma > 0):
        raise ContractViolation("delta and gamma must be positive")
    pair = CoupledPair(
        primary=primary, mirror=mirror, delta=delta, gamma=gamma, seed=seed,
        f1=f1, f2=f2,
    )
    _record_distance(pair)
    return pair


def coupled_step(pair: CoupledPair, kernel: GameKernel, dt: float) -> CoupledPair:
    """Advance both legs one step under the mixed reflection-synchronous coupling.

    Reflection/synchronous weights are evaluated at the pre-step differences;
    the mirror receives the reflected share of the same Gaussian increments,
    reflected across the current difference direction.
    """
    p, m = pair.primary, pair.mirror
    _check_dt(kernel, p.eta, dt)
    inv_beta = 0.0 if np.isinf(p.beta) else 1.0 / p.beta
    step, seed = p.step_count, pair.seed

    z_norm, e1 = _unit_rows(p.X - m.X)
    q_norm, e2 = _unit_rows(p.Y - m.Y)
    rc1 = rc_weight(z_norm, pair.delta)[:, None]
    sc1 = np.sqrt(1.0 - rc1**2)
    rc2 = rc_weight(q_norm, pair.delta)[:, None]
    sc2 = np.sqrt(1.0 - rc2**2)

    w_rx = counter_normals(seed, step, ROLE_X_REFLECT, p.X.shape)
    w_sx = counter_normals(seed, step, ROLE_X_SYNC, p.X.shape)
    w_ry = counter_normals(seed, step, ROLE_Y_REFLECT, p.Y.shape)
    w_sy = counter_normals(seed, step, ROLE_Y_SYNC, p.Y.shape)

    cx = math.sqrt(2.0 * inv_beta * dt)
    cy = math.sqrt(2.0 * p.eta * inv_beta * dt)
    noise_px = cx * (rc1 * w_rx + sc1 * w_sx)
    noise_py = cy * (rc2 * w_ry + sc2 * w_sy)
    refl_x = w_rx - 2.0 * np.sum(e1 * w_rx, axis=1, keepdims=True) * e1
    refl_y = w_ry - 2.0 * np.sum(e2 * w_ry, axis=1, keepdims=True) * e2
    noise_mx = cx * (rc1 * refl_x + sc1 * w_sx)
    noise_my = cy * (rc2 * refl_y + sc2 * w_sy)

    Xp, Yp = _step_arrays(kernel, p.X, p.Y, p.eta, dt, noise_px, noise_py)
    Xm, Ym = _step_arrays(kernel, m.X, m.Y, m.eta, dt, noise_mx, noise_my)
    for arr in (Xp, Yp, Xm, Ym):
        if not np.all(np.isfinite(arr)):
            raise DivergenceError(f"non-finite coordinate after step {step}", step=step)

    pair.primary = replace(p, X=Xp, Y=Yp, t=p.t + dt, step_count=step + 1)
    pair.mirror = replace(m, X=Xm, Y=Ym, t=m.t + dt, step_count=step + 1)
    _record_distance(pair)
    return pair


@dataclass(frozen=True)
class ProfileSamples:
    """Monte Carlo estimate of the radial convexity profile on a radius grid."""

    r: np.ndarray
    kappa: np.ndarray
    kappa_tilde: np.ndarray
    stderr: np.ndarray


def _measure_points(measure, side: str) -> tuple[np.ndarray, np.ndarray | None, np.ndarray, np.ndarray | None]:
    """Base points/weights of the requested side plus opponent points/weights."""
    if isinstance(measure, ParticleSystem):
        if side == "X":
            return measure.X, None, measure.Y, None
        return measure.Y, None, measure.X, None
    if isinstance(measure, GridMeasurePair):
        xpts = np.asarray(measure.x_grid, dtype=float).reshape(len(measure.x_grid), -1)
        ypts = np.asarray(measure.y_grid, dtype=float).reshape(len(measure.y_grid), -1)
        if side == "X":
            return xpts, measure.p, ypts, measure.q
        return ypts, measure.q, xpts, measure.p
    raise ContractViolation(f"unsupported measure type {type(measure).__name__}")


def kappa_profile(
    kernel: GameKernel,
    measure,
    side: str,
    r_grid,
    *,
    n_base: int = 1000,
    n_dir: int = 100,
    seed: int = 0,
) -> ProfileSamples:
    """Estimate kappa_side(r) by sampled directional monotonicity of the mean gradient.

    For each radius r, base points are drawn from the measure's own marginal
    and unit directions uniformly; the reported value is the sample minimum
    of <u, E_opp[grad(x0 + r u) - grad(x0)]> / r minus one standard error
    (a conservative stand-in for the infimum). Side "Y" flips the sign so
    positive kappa means concavity for the ascending player.
    """
    side = side.upper()
    if side not in ("X", "Y"):
        raise ContractViolation("side must be 'X' or 'Y'")
    r_grid = np.asarray(r_grid, dtype=float)
    if r_grid.ndim != 1 or np.any(r_grid <= 0) or np.any(np.diff(r_grid) <= 0):
        raise ContractViolation("r_grid must be positive and ascending")
    base_pts, base_w, opp_pts, opp_w = _measure_points(measure, side)
    if base_pts.shape[0] == 0:
        raise ContractViolation("empty measure")
    dim = base_pts.shape[1]
    rng = np.random.Generator(
        np.random.Philox(key=np.uint64(seed), counter=[0, 0, 0, 17])
    )
    idx = rng.choice(base_pts.shape[0], size=n_base, p=base_w)
    bases = base_pts[idx]
    dirs = rng.standard_normal((n_dir, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)

    if opp_w is None:
        opp_mean_pts = opp_pts
        weights = np.full(opp_pts.shape[0], 1.0 / opp_pts.shape[0])
    else:
        opp_mean_pts = opp_pts
        weights = opp_w

    def mean_grad(points: np.ndarray) -> np.ndarray:
        # E_opp[grad(point, .)] row-wise, against the opponent measure
        if side == "X" and kernel.mean_grad_x is not None and opp_w is None:
            return kernel.mean_grad_x(points, opp_mean_pts)
        if side == "Y" and kernel.mean_grad_y is not None and opp_w is None:
            return kernel.mean_grad_y(opp_mean_pts, points)
        grad = kernel.grad_x if side == "X" else kernel.grad_y
        out = np.zeros_like(points)
        for j in range(opp_mean_pts.shape[0]):
            if side == "X":
                out += weights[j] * np.stack(
                    [grad(pt, opp_mean_pts[j]) for pt in points]
                )
            else:
                out += weights[j] * np.stack(
                    [grad(opp_mean_pts[j], pt) for pt in points]
                )
        return out

    sign = 1.0 if side == "X" else -1.0
    kappa_vals = np.empty_like(r_grid)
    stderr = np.empty_like(r_grid)
    pairs = np.repeat(bases, n_dir, axis=0)
    u_all = np.tile(dirs, (n_base, 1))
    g0 = mean_grad(pairs)
    for i, r in enumerate(r_grid):
        g1 = mean_grad(pairs + r * u_all)
        samples = sign * np.sum(u_all * (g1 - g0), axis=1) / r
        se = float(samples.std(ddof=1) / math.sqrt(samples.size))
        kappa_vals[i] = float(samples.min()) - se
        stderr[i] = se
    return ProfileSamples(
        r=r_grid,
        kappa=kappa_vals,
        kappa_tilde=np.maximum(0.0, -kappa_vals),
        stderr=stderr,
    )


@dataclass(frozen=True)
class GridMeasurePair:
    """Discrete measures p, q on fixed grids (weights sum to one, no spacing factor)."""

    x_grid: np.ndarray
    y_grid: np.ndarray
    p: np.ndarray
    q: np.ndarray
    residual_p: float = 0.0
    residual_q: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        for name, w in (("p", self.p), ("q", self.q)):
            w = np.asarray(w, dtype=float)
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise ContractViolation(
                    f"{name} must be nonnegative and sum to 1 within 1e-12"
                )


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    w = np.exp(z)
    return w / w.sum()


def mne_fixed_point(
    kernel: GameKernel,
    beta: float,
    grids: tuple,
    damping: float = 0.5,
    tol: float = 1e-12,
    max_iter: int = 5000,
) -> GridMeasurePair:
    """Damped fixed-point iteration for the entropy-regularized equilibrium.

    p <- normalize(exp(-beta K q)), q <- normalize(exp(+beta K^T p)) with
    linear mixing ``damping``; converged when the sup-norm residual of both
    update maps drops below tol. Raises NumericalError (with the last
    residual) when max_iter is exhausted.
    """
    if not (0.0 < damping <= 1.0):
        raise ContractViolation("damping must lie in (0, 1]")
    x_grid = np.asarray(grids[0], dtype=float)
    y_grid = np.asarray(grids[1], dtype=float)
    xs = x_grid.reshape(len(x_grid), -1)
    ys = y_grid.reshape(len(y_grid), -1)
    if kernel.evaluate_grid is not None:
        K = kernel.evaluate_grid(xs, ys)
    else:
        K = np.array([[kernel.evaluate(x, y) for y in ys] for x in xs])

    p = np.full(len(xs), 1.0 / len(xs))
    q = np.full(len(ys), 1.0 / len(ys))
    res_p = res_q = float("inf")
    for it in range(1, max_iter + 1):
        p_star = _softmax(-beta * (K @ q))
        p = (1.0 - damping) * p + damping * p_star
        q_star = _softmax(beta * (K.T @ p))
        q = (1.0 - damping) * q + damping * q_star
        res_p = float(np.abs(p - _softmax(-beta * (K @ q))).max())
        res_q = float(np.abs(q - _softmax(beta * (K.T @ p))).max())
        if res_p < tol and res_q < tol:
            p = p / p.sum()
            q = q / q.sum()
            return GridMeasurePair(
                x_grid=x_grid, y_grid=y_grid, p=p, q=q,
                residual_p=res_p, residual_q=res_q, iterations=it,
            )
    raise NumericalError(
        f"fixed point did not converge in {max_iter} iterations "
        f"(residuals {res_p:.3e}, {res_q:.3e})"
    )


def _w1_1d(xa, wa, xb, wb) -> float:
    """Exact 1-D Wasserstein-1 via the merged-breakpoint CDF integral."""
    order_a = np.argsort(xa, kind="stable")
    order_b = np.argsort(xb, kind="stable")
    xa, wa = xa[order_a], wa[order_a]
    xb, wb = xb[order_b], wb[order_b]
    xs = np.concatenate([xa, xb])
    xs.sort(kind="stable")
    ca = np.concatenate([[0.0], np.cumsum(wa)])
    cb = np.concatenate([[0.0], np.cumsum(wb)])
    Fa = ca[np.searchsorted(xa, xs[:-1], side="right")]
    Fb = cb[np.searchsorted(xb, xs[:-1], side="right")]
    return float(np.sum(np.abs(Fa - Fb) * np.diff(xs)))


def wasserstein1(a_points, b_points, a_weights=None, b_weights=None) -> float:
    """Wasserstein-1 distance between two weighted point sets.

    1-D inputs use the exact quantile/CDF coupling for arbitrary weights.
    In higher dimension, equal-size uniform sets are matched exactly by
    rectangular assignment; weighted sets fall back to a dense transport LP.
    Sizes above 2000 per side (d > 1) are refused.
    """
    A = np.asarray(a_points, dtype=float)
    B = np.asarray(b_points, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if B.ndim == 1:
        B = B[:, None]
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise ContractViolation("point sets must be nonempty")
    if A.shape[1] != B.shape[1]:
        raise DimensionError(
            f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}"
        )

    def norm_weights(w, k, name):
        if w is None:
            return np.full(k, 1.0 / k)
        w = np.asarray(w, dtype=float)
        if w.shape != (k,) or np.any(w < 0):
            raise ContractViolation(f"{name} must be {k} nonnegative weights")
        s = w.sum()
        if s <= 0:
            raise ContractViolation(f"{name} must have positive total mass")
        return w / s

    wa = norm_weights(a_weights, A.shape[0], "a_weights")
    wb = norm_weights(b_weights, B.shape[0], "b_weights")

    if A.shape[1] == 1:
        return _w1_1d(A[:, 0], wa, B[:, 0], wb)

    if A.shape[0] > 2000 or B.shape[0] > 2000:
        raise ContractViolation("d > 1 point sets are capped at 2000 per side")

    uniform = (
        A.shape[0] == B.shape[0]
        and np.allclose(wa, 1.0 / A.shape[0])
        and np.allclose(wb, 1.0 / B.shape[0])
    )
    cost = scipy.spatial.distance.cdist(A, B)
    if uniform:
        rows, cols = scipy.optimize.linear_sum_assignment(cost)
        return float(cost[rows, cols].mean())

    ka, kb = A.shape[0], B.shape[0]
    if ka * kb > 400_000:
        raise ContractViolation(
            "weighted d > 1 transport limited to 400000 cost entries at desk scale"
        )
    row_idx = np.repeat(np.arange(ka), kb)
    col_idx = np.tile(np.arange(kb), ka)
    data = np.ones(ka * kb)
    A_eq = scipy.sparse.vstack(
        [
            scipy.sparse.csr_matrix((data, (row_idx, np.arange(ka * kb))), shape=(ka, ka * kb)),
            scipy.sparse.csr_matrix((data, (col_idx, np.arange(ka * kb))), shape=(kb, ka * kb)),
        ]
    )
    b_eq = np.concatenate([wa, wb])
    res = scipy.optimize.linprog(
        cost.reshape(-1), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs"
    )
    if not res.success:  # pragma: no cover - HiGHS is reliable on feasible LPs
        raise NumericalError(f"transport LP failed: {res.message}")
    return float(res.fun)


@dataclass(frozen=True)
class ContractionParams:
    """Knobs of one coupled contraction run."""

    beta: float
    eta: float
    gamma: float
    delta: float
    N: int
    dt: float
    horizon: float
    separation: float = 4.0
    init_std: float = 1.0
    slack: float = 0.01
    mne: GridMeasurePair | None = None
    w1_stride: int = 0


@dataclass(frozen=True)
class ContractionReport:
    """Seed-averaged coupling decay with the certificate it is measured against."""

    t: np.ndarray
    mean_rho: np.ndarray
    mean_Z: np.ndarray
    mean_Q: np.ndarray
    fitted_rate: float
    predicted_c: float
    rate_ok: bool
    admissibility: rates.AdmissibilityReport
    w1_trace: np.ndarray | None = None


def _init_system(
    kernel: GameKernel, params: ContractionParams, seed: int, side_sign: float
) -> ParticleSystem:
    base_x = counter_normals(seed, 0, ROLE_INIT_X, (params.N, kernel.dim_x))
    base_y = counter_normals(seed, 0, ROLE_INIT_Y, (params.N, kernel.dim_y))
    X = params.init_std * base_x
    Y = params.init_std * base_y
    X[:, 0] += side_sign * params.separation / 2.0
    Y[:, 0] += side_sign * params.separation / 2.0
    return ParticleSystem(X=X, Y=Y, beta=params.beta, eta=params.eta)


def default_distance_functions(kernel: GameKernel, beta: float):
    """(f1, f2) for the coupling metric: identity when R = 0, built f otherwise."""
    geo = kernel.geometry
    if geo.R == 0.0:
        def identity(r):
            return np.asarray(r, dtype=float)

        return identity, identity
    a = 4.0 / beta
    prof1 = rates.make_rate_profile(
        rates.piecewise_kappa(geo.m_x, geo.kappa_x, geo.R), a, 1.0
    )
    prof2 = rates.make_rate_profile(
        rates.piecewise_kappa(geo.m_y, geo.kappa_y, geo.R), a, 1.0
    )
    return prof1.f_of, prof2.f_of


def contraction_experiment(
    kernel: GameKernel, params: ContractionParams, seeds: Sequence[int]
) -> ContractionReport:
    """Run coupled pairs across seeds and fit the decay rate of mean rho_t.

    Primary and mirror start from distinct Gaussian clouds separated along
    the first coordinate. The fit is log-linear over the window down to 10%
    of the initial mean distance (or the whole trace when it never gets
    there). predicted_c comes from the admissibility report; rate_ok records
    fitted >= 0.5 * predicted.
    """
    if len(seeds) == 0:
        raise ContractViolation("at least one seed is required")
    f1, f2 = default_distance_functions(kernel, params.beta)
    steps = int(round(params.horizon / params.dt))
    traces, z_traces, q_traces = [], [], []
    w1_rows: list[tuple[float, float]] = []
    for seed in seeds:
        pair = make_coupled_pair(
            _init_system(kernel, params, seed, +1.0),
            _init_system(kernel, params, seed, -1.0),
            delta=params.delta,
            gamma=params.gamma,
            seed=seed,
            f1=f1,
            f2=f2,
        )
        for k in range(steps):
            coupled_step(pair, kernel, params.dt)
            if (
                params.mne is not None
                and params.w1_stride > 0
                and (k + 1) % params.w1_stride == 0
            ):
                w1_rows.append(
                    (
                        pair.primary.t,
                        wasserstein1(
                            pair.primary.X,
                            params.mne.x_grid,
                            None,
                            params.mne.p,
                        ),
                    )
                )
        tr = pair.trace_array()
        traces.append(tr[:, 1])
        z_traces.append(tr[:, 2])
        q_traces.append(tr[:, 3])
    t = pair.trace_array()[:, 0]
    mean_rho = np.mean(traces, axis=0)
    mean_Z = np.mean(z_traces, axis=0)
    mean_Q = np.mean(q_traces, axis=0)

    if mean_rho[0] <= 0.0:
        # identical legs: distance is exactly zero, nothing to fit
        fitted = 0.0
    else:
        floor = 0.1 * mean_rho[0]
        below = np.nonzero(mean_rho < floor)[0]
        end = int(below[0]) + 1 if below.size else len(mean_rho)
        window = slice(0, max(end, 3))
        logs = np.log(np.clip(mean_rho[window], 1e-300, None))
        slope, _ = np.polyfit(t[window], logs, 1)
        fitted = float(-slope)

    report = rates.admissibility(
        kernel.geometry, params.beta, params.eta, params.gamma, slack=params.slack
    )
    predicted = report.predicted_c
    return ContractionReport(
        t=t,
        mean_rho=mean_rho,
        mean_Z=mean_Z,
        mean_Q=mean_Q,
        fitted_rate=fitted,
        predicted_c=predicted,
        rate_ok=fitted >= 0.5 * predicted,
        admissibility=report,
        w1_trace=np.asarray(w1_rows) if w1_rows else None,
    )
