"""Two-timescale quadratic games: assembly, spectra, hypocoercivity, simulation.

The game min_x max_y 1/2 x^T Q x + x^T P y - 1/2 y^T R y played by gradient
descent-ascent with learning-rate ratio eta gives the linear flow

    dx/dt = -Q x - P y,      dy/dt = -eta R y + eta P^T x.

In the rescaled variables z = sqrt(eta) x, phi = [z, y] the generator splits
into a symmetric dissipative part D = diag(Q, eta R) and a skew interaction
sqrt(eta) L with L = [[0, P], [-P^T, 0]]:

    dphi/dt = -(D + sqrt(eta) L) phi,        s = sqrt(eta) t.

The module computes the spectral abscissa of that generator, builds the
auxiliary operator M and the modified norm H(phi) = 1/2 ||phi||^2 -
eps <M phi, phi> behind the hypocoercive decay estimate, extracts all the
coercivity constants the estimate needs, and certifies a decay rate in the
rescaled time s. Simulation uses exact matrix-exponential propagation by
default, so step size never enters the picture.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .errors import (
    AssumptionViolation,
    ContractViolation,
    DimensionError,
    StepSizeError,
)
from .linalg import as_matrix, eigenvalues, kernel_projection

__all__ = [
    "QuadraticGame",
    "SystemMatrices",
    "Regime",
    "HypocoercivityReport",
    "Trajectory",
    "DecayFit",
    "assemble",
    "system_matrix",
    "spectral_rate",
    "build_M",
    "coercivity_constants",
    "lyapunov_H",
    "simulate_gda",
    "fit_decay_rate",
]

_SYM_TOL = 1e-10


@dataclass(frozen=True)
class QuadraticGame:
    """Symmetric PSD blocks Q (n x n), R (m x m), interaction P (n x m), ratio eta > 0."""

    Q: np.ndarray
    R: np.ndarray
    P: np.ndarray
    eta: float

    def __post_init__(self):
        Q = as_matrix(self.Q, square=True, name="Q")
        R = as_matrix(self.R, square=True, name="R")
        P = as_matrix(self.P, name="P")
        if P.shape != (Q.shape[0], R.shape[0]):
            raise DimensionError(
                f"P must be {Q.shape[0]}x{R.shape[0]} to match Q and R, got {P.shape}"
            )
        for name, A in (("Q", Q), ("R", R)):
            scale = max(1.0, float(np.abs(A).max()))
            if float(np.abs(A - A.T).max()) > _SYM_TOL * scale:
                raise ContractViolation(f"{name} must be symmetric within {_SYM_TOL}")
            if float(np.linalg.eigvalsh(0.5 * (A + A.T)).min()) < -_SYM_TOL * scale:
                raise ContractViolation(f"{name} must be positive semidefinite")
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise ContractViolation(f"eta must be a positive finite scalar, got {self.eta}")
        object.__setattr__(self, "Q", 0.5 * (Q + Q.T))
        object.__setattr__(self, "R", 0.5 * (R + R.T))
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "eta", float(self.eta))

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def m(self) -> int:
        return self.R.shape[0]

    def with_eta(self, eta: float) -> "QuadraticGame":
        return replace(self, eta=eta)


@dataclass(frozen=True)
class SystemMatrices:
    """D = diag(Q, eta R), skew L = [[0, P], [-P^T, 0]], S = diag(Q, R)."""

    D: np.ndarray
    L: np.ndarray
    S: np.ndarray
    n: int
    m: int


def assemble(game: QuadraticGame) -> SystemMatrices:
    """Block matrices D, L, S of the rescaled flow; off-pattern blocks exactly zero."""
    n, m = game.n, game.m
    D = np.zeros((n + m, n + m))
    D[:n, :n] = game.Q
    D[n:, n:] = game.eta * game.R
    L = np.zeros((n + m, n + m))
    L[:n, n:] = game.P
    L[n:, :n] = -game.P.T
    S = np.zeros((n + m, n + m))
    S[:n, :n] = game.Q
    S[n:, n:] = game.R
    return SystemMatrices(D=D, L=L, S=S, n=n, m=m)


def system_matrix(game: QuadraticGame) -> np.ndarray:
    """Generator A = D + sqrt(eta) L of dphi/dt = -A phi in original time t."""
    sys = assemble(game)
    return sys.D + np.sqrt(game.eta) * sys.L


def spectral_rate(game: QuadraticGame) -> float:
    """mu_eta = min Re Sp(D + sqrt(eta) L), the t-time spectral abscissa."""
    return eigenvalues(system_matrix(game)).min_real


def build_M(L, Pi) -> np.ndarray:
    """Auxiliary operator M = -(I + (L Pi)^T L Pi)^(-1) (L Pi)^T.

    Requires Pi to be an orthogonal projector with Pi L Pi ~ 0 (the structural
    assumption behind the hypocoercive estimate); violation beyond
    1e-8 * max(1, ||L||) raises AssumptionViolation naming the norm.
    The result satisfies Pi M = M and the bounds ||M phi|| <= 1/2 ||(I-Pi) phi||,
    ||L M phi|| <= ||(I-Pi) phi||.
    """
    Lm = as_matrix(L, square=True, name="L")
    Pm = as_matrix(Pi, square=True, name="Pi")
    if Pm.shape != Lm.shape:
        raise DimensionError("L and Pi must have matching shapes")
    if float(np.linalg.norm(Pm @ Pm - Pm, 2)) > 1e-8:
        raise ContractViolation("Pi is not an orthogonal projector (Pi^2 != Pi)")
    if float(np.linalg.norm(Pm - Pm.T, 2)) > 1e-8:
        raise ContractViolation("Pi is not an orthogonal projector (Pi^T != Pi)")
    cross = float(np.linalg.norm(Pm @ Lm @ Pm, 2))
    if cross > 1e-8 * max(1.0, float(np.linalg.norm(Lm, 2))):
        raise AssumptionViolation(
            f"Pi L Pi must vanish for the construction; ||Pi L Pi|| = {cross:.3e}"
        )
    B = Lm @ Pm
    n = Lm.shape[0]
    M = -np.linalg.solve(np.eye(n) + B.T @ B, B.T)
    return M


class Regime(str, enum.Enum):
    """Which quasi-static limit the hypocoercivity constants target."""

    SMALL_ETA = "SmallEta"
    LARGE_ETA = "LargeEta"


@dataclass(frozen=True)
class HypocoercivityReport:
    """Constants and certified rate of the modified-norm decay estimate.

    ``predicted_rate`` bounds the decay of H along the flow in rescaled time
    s: dH/ds <= -predicted_rate * ||phi||^2, clamped at 0 when the certificate
    is void. ``macroscopic_coercivity_ok`` is False when the interaction P
    fails to act on the kernel directions (lambda_L <= 0), in which case the
    report is diagnostic rather than a certificate.
    """

    which_regime: Regime
    Pi: np.ndarray
    M: np.ndarray
    lambda_coercive: float
    lambda_L: float
    Lambda: float
    C_M: float
    C_perturb: float
    eps: float
    predicted_rate: float
    macroscopic_coercivity_ok: bool = True
    schur_entries: tuple[float, float, float] = field(default=(0.0, 0.0, 0.0))
    perturbation: float = 0.0


def _least_nonzero_eigenvalue(A: np.ndarray) -> float:
    """Smallest eigenvalue above the kernel cutoff of a symmetric PSD matrix."""
    w = np.linalg.eigvalsh(0.5 * (A + A.T))
    cut = 1e-10 * max(1.0, float(np.abs(w).max()))
    positive = w[w > cut]
    if positive.size == 0:
        return 0.0
    return float(positive.min())


def coercivity_constants(game: QuadraticGame, regime: Regime) -> HypocoercivityReport:
    """Extract every constant of the decay estimate for the chosen regime.

    SmallEta projects onto the kernel of diag(Q, 0) (so the y block is kernel),
    LargeEta onto the kernel of diag(0, R). lambda_L is the macroscopic
    coercivity constant restricted to range(Pi); Lambda = ||M S||, C_M = ||M L||;
    C_perturb is ||R||_F (SmallEta) or ||Q||_F (LargeEta); eps follows the
    proof's sqrt(eta) prescription capped at 1/2. predicted_rate combines the
    2x2 Schur-type bound with the perturbation term, clamped at 0.
    """
    regime = Regime(regime)
    sys = assemble(game)
    n, m = game.n, game.m
    dim = n + m
    eta = game.eta
    sqrt_eta = np.sqrt(eta)

    B = np.zeros((dim, dim))
    if regime is Regime.SMALL_ETA:
        B[:n, :n] = game.Q
        lambda_coercive = _least_nonzero_eigenvalue(game.Q)
        C_perturb = float(np.linalg.norm(game.R, "fro"))
        eps = min(0.5, sqrt_eta)
    else:
        B[n:, n:] = game.R
        lambda_coercive = _least_nonzero_eigenvalue(game.R)
        C_perturb = float(np.linalg.norm(game.Q, "fro"))
        eps = min(0.5, 1.0 / sqrt_eta)

    Pi = kernel_projection(B)
    M = build_M(sys.L, Pi)  # raises AssumptionViolation if Pi L Pi != 0

    # Macroscopic coercivity restricted to range(Pi): the smallest Rayleigh
    # quotient ||L Pi v||^2 / ||v||^2 over unit v in range(Pi).
    w, V = np.linalg.eigh(Pi)
    basis = V[:, w > 0.5]  # projector eigenvalues are ~0 or ~1
    if basis.shape[1] == 0:
        lambda_L = 0.0
    else:
        G = (sys.L @ basis).T @ (sys.L @ basis)
        lambda_L = float(np.linalg.eigvalsh(0.5 * (G + G.T)).min())
        lambda_L = max(lambda_L, 0.0) if abs(lambda_L) < 1e-14 else lambda_L
    macroscopic_ok = lambda_L > 0.0

    Lambda = float(np.linalg.norm(M @ sys.S, 2))
    C_M = float(np.linalg.norm(M @ sys.L, 2))

    if regime is Regime.SMALL_ETA:
        S_pp = lambda_coercive / sqrt_eta
        S_pm = -eps * (Lambda / (2.0 * sqrt_eta) + C_perturb * sqrt_eta / 2.0 + 1.0 + C_M)
        perturbation = (1.0 + eps) * C_perturb * sqrt_eta
    else:
        S_pp = lambda_coercive * sqrt_eta
        S_pm = -eps * (Lambda * sqrt_eta / 2.0 + C_perturb / (2.0 * sqrt_eta) + 1.0 + C_M)
        perturbation = (1.0 + eps) * C_perturb / sqrt_eta
    S_mm = eps * lambda_L / (1.0 + lambda_L)

    lam_min = 0.5 * (S_pp + S_mm - np.sqrt((S_pp - S_mm) ** 2 + S_pm**2))
    predicted = max(0.0, float(lam_min - perturbation)) if macroscopic_ok else 0.0

    return HypocoercivityReport(
        which_regime=regime,
        Pi=Pi,
        M=M,
        lambda_coercive=lambda_coercive,
        lambda_L=lambda_L,
        Lambda=Lambda,
        C_M=C_M,
        C_perturb=C_perturb,
        eps=eps,
        predicted_rate=predicted,
        macroscopic_coercivity_ok=macroscopic_ok,
        schur_entries=(float(S_pp), float(S_mm), float(S_pm)),
        perturbation=float(perturbation),
    )


def lyapunov_H(phi, M, eps: float) -> float:
    """Modified norm H(phi) = 1/2 ||phi||^2 - eps <M phi, phi>.

    Norm equivalence (1-eps)/2 ||phi||^2 <= H <= (1+eps)/2 ||phi||^2 holds
    whenever ||M|| <= 1/2, which the construction of M guarantees.
    """
    if not 0.0 <= eps < 1.0:
        raise ContractViolation(f"eps must lie in [0, 1), got {eps}")
    v = np.asarray(phi, dtype=float).reshape(-1)
    Mm = as_matrix(M, square=True, name="M")
    if Mm.shape[0] != v.shape[0]:
        raise DimensionError("M and phi sizes do not match")
    return float(0.5 * v @ v - eps * (Mm @ v) @ v)


@dataclass(frozen=True)
class Trajectory:
    """Sampled GDA path in original and rescaled coordinates.

    Columns: times t and s = sqrt(eta) t, states x, y, rescaled z = sqrt(eta) x,
    the rescaled squared norm ||phi||^2 = eta ||x||^2 + ||y||^2, and the
    modified norm H (computed with the supplied (M, eps), or eps = 0 when
    none was given, in which case H = ||phi||^2 / 2).
    """

    t: np.ndarray
    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    norm_phi_sq: np.ndarray
    H: np.ndarray
    eta: float

    def observable(self, name: str) -> np.ndarray:
        key = name.strip().lower()
        if key in ("normsq", "norm_sq", "norm_phi_sq"):
            return self.norm_phi_sq
        if key in ("lyapunov", "h"):
            return self.H
        raise ValueError(f"unknown observable {name!r}")


def simulate_gda(
    game: QuadraticGame,
    x0,
    y0,
    horizon: float,
    dt: float,
    *,
    method: str = "exact",
    M: np.ndarray | None = None,
    eps: float = 0.0,
) -> Trajectory:
    """Simulate the two-timescale flow, sampling every dt up to the horizon.

    method="exact" propagates with the matrix exponential of the generator
    (no discretization error); "rk4" takes classical Runge-Kutta substeps;
    "euler" is explicit Euler and enforces dt < 1 / (2 sigma_max(A)).
    """
    n, m = game.n, game.m
    x = np.asarray(x0, dtype=float).reshape(-1)
    y = np.asarray(y0, dtype=float).reshape(-1)
    if x.shape[0] != n or y.shape[0] != m:
        raise DimensionError(f"x0, y0 must have lengths {n}, {m}")
    if dt <= 0 or horizon < 0:
        raise ContractViolation("dt must be positive and horizon nonnegative")

    A = system_matrix(game)
    steps = int(round(horizon / dt))
    sqrt_eta = np.sqrt(game.eta)
    phi = np.concatenate([sqrt_eta * x, y])

    if method == "exact":
        E = scipy.linalg.expm(-A * dt)
        stepper = lambda v: E @ v
    elif method == "rk4":
        def stepper(v, _A=A, _dt=dt):
            k1 = -_A @ v
            k2 = -_A @ (v + 0.5 * _dt * k1)
            k3 = -_A @ (v + 0.5 * _dt * k2)
            k4 = -_A @ (v + _dt * k3)
            return v + (_dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    elif method == "euler":
        sigma = float(np.linalg.norm(A, 2))
        if sigma > 0 and dt >= 1.0 / (2.0 * sigma):
            raise StepSizeError(
                f"explicit Euler needs dt < {1.0 / (2.0 * sigma):.3e}, got {dt}"
            )
        stepper = lambda v, _A=A, _dt=dt: v - _dt * (_A @ v)
    else:
        raise ValueError(f"unknown method {method!r}")

    states = np.empty((steps + 1, n + m))
    states[0] = phi
    for k in range(steps):
        phi = stepper(phi)
        states[k + 1] = phi

    t = dt * np.arange(steps + 1)
    z = states[:, :n]
    yv = states[:, n:]
    xv = z / sqrt_eta
    norm_sq = np.einsum("ij,ij->i", states, states)
    if M is None:
        H = 0.5 * norm_sq
    else:
        Mm = as_matrix(M, square=True, name="M")
        H = 0.5 * norm_sq - eps * np.einsum("ij,ij->i", states @ Mm.T, states)
    return Trajectory(
        t=t, s=sqrt_eta * t, x=xv, y=yv, z=z, norm_phi_sq=norm_sq, H=H, eta=game.eta
    )


@dataclass(frozen=True)
class DecayFit:
    rate: float
    prefactor: float
    residual: float


def fit_decay_rate(
    trajectory: Trajectory,
    observable: str = "norm_sq",
    *,
    time_scale: str = "t",
) -> DecayFit:
    """Least-squares exponential fit over the tail half of a trajectory.

    Fits log(observable) against time (original t or rescaled s) on the tail
    half, truncated at the first nonpositive value. Returns the decay rate
    (positive for decay), the prefactor exp(intercept), and the RMS residual
    of the linear fit.
    """
    y = trajectory.observable(observable)
    if time_scale == "t":
        times = trajectory.t
    elif time_scale == "s":
        times = trajectory.s
    else:
        raise ValueError(f"time_scale must be 't' or 's', got {time_scale!r}")
    if y.shape[0] < 10:
        raise ContractViolation("trajectory too short to fit (need >= 10 samples)")

    start = y.shape[0] // 2
    yw = y[start:]
    tw = times[start:]
    bad = np.nonzero(yw <= 0.0)[0]
    if bad.size:
        yw = yw[: bad[0]]
        tw = tw[: bad[0]]
    if yw.shape[0] < 2:
        raise ContractViolation("observable not positive on the fit window")

    logy = np.log(yw)
    slope, intercept = np.polyfit(tw, logy, 1)
    resid = logy - (slope * tw + intercept)
    return DecayFit(
        rate=float(-slope),
        prefactor=float(np.exp(intercept)),
        residual=float(np.sqrt(np.mean(resid**2))),
    )
