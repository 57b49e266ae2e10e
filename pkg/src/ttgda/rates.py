"""Constructive Wasserstein contraction rates from radial convexity profiles.

Given a radial profile kappa(r) (worst-case directional convexity of the drift
at distance r, possibly negative near the origin), this module builds the
concave increasing distance function f used to measure coupled particle pairs,
and the contraction constant c it certifies:

    phi(r) = exp(-(b/a) int_0^r kappa~(s) s ds),   kappa~ = max(0, -kappa),
    Phi(r) = int_0^r phi,   f' = phi g,   g' = -(Phi / 2 phi) / I on (0, R1),
    g = 1/2 beyond R1,      c = (a/2) / I,   I = int_0^{R1} Phi / phi.

R0 is the radius beyond which kappa is nonnegative, R1 >= R0 the radius
beyond which kappa(r) r (r - R0) >= 2a/b. The constructed f satisfies the
differential inequality a f'' - b kappa(r) r f' <= -c f, verified here by
finite differences on the tabulation grid. A closed-form two-sided bracket
[a/(2X), a/X] for c is available when the nonconvexity radius is moderate,
along with the admissibility report (radius condition, cross-Lipschitz
conditions, predicted decay constant) for a mean-field game geometry.

Everything is one-dimensional and tabulated on a dense uniform grid; trapezoid
quadrature keeps the construction and its verification consistent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import ConstructionError, ContractViolation, OutOfRegimeError

__all__ = [
    "RateProfile",
    "AdmissibilityReport",
    "negative_part_profile",
    "compute_R0_R1",
    "build_f",
    "make_rate_profile",
    "closed_form_c",
    "bracket_c",
    "admissibility",
    "piecewise_kappa",
    "benchmark_kappa",
]

GRID_POINTS = 4096


@dataclass(frozen=True)
class RateProfile:
    """Radial profile and (once built) the distance function it certifies.

    All function fields are tabulated on the uniform grid ``r``; they are None
    until build_f fills them. ``a`` is the diffusion coefficient (4/beta for
    the particle systems), ``b`` the drift weight.
    """

    r: np.ndarray
    kappa: np.ndarray
    kappa_tilde: np.ndarray
    a: float
    b: float
    R0: float | None = None
    R1: float | None = None
    tail_K: float | None = None
    phi: np.ndarray | None = None
    Phi: np.ndarray | None = None
    g: np.ndarray | None = None
    f: np.ndarray | None = None
    f_prime: np.ndarray | None = None
    c: float | None = None

    def f_of(self, radii: np.ndarray) -> np.ndarray:
        """Evaluate the built f by linear interpolation (linear tail beyond the grid)."""
        if self.f is None:
            raise ContractViolation("profile has no f yet; run build_f first")
        radii = np.asarray(radii, dtype=float)
        inside = np.interp(radii, self.r, self.f)
        # beyond the grid f continues with its (constant) terminal slope
        tail_slope = self.f_prime[-1]
        return np.where(
            radii <= self.r[-1], inside, self.f[-1] + tail_slope * (radii - self.r[-1])
        )


def negative_part_profile(kappa) -> np.ndarray:
    """Pointwise max(0, -kappa)."""
    return np.maximum(0.0, -np.asarray(kappa, dtype=float))


def compute_R0_R1(r, kappa, a: float, b: float) -> tuple[float, float]:
    """Grid-certified radii: kappa >= 0 beyond R0; kappa(s) s (s - R0) >= 2a/b beyond R1.

    Both are returned as grid points (smallest grid value from which the
    respective condition holds at every later grid point). Raises when the
    profile never turns nonnegative or the grid is too short to certify R1.
    """
    r = np.asarray(r, dtype=float)
    k = np.asarray(kappa, dtype=float)
    if r.ndim != 1 or r.shape != k.shape or r.size < 2:
        raise ContractViolation("r and kappa must be matching 1-D arrays")
    if np.any(np.diff(r) <= 0):
        raise ContractViolation("r grid must be strictly ascending")
    if a <= 0 or b <= 0:
        raise ContractViolation("a and b must be positive")
    if k[-1] <= 0:
        raise OutOfRegimeError(
            "profile tail is nonpositive; no finite R1 exists for this grid"
        )

    nonneg_suffix = np.flip(np.minimum.accumulate(np.flip(k))) >= 0
    if not nonneg_suffix.any():
        raise OutOfRegimeError("kappa never becomes nonnegative on the grid")
    i0 = int(np.argmax(nonneg_suffix))
    R0 = float(r[i0])

    growth = k * r * (r - R0) - 2.0 * a / b
    ok_suffix = np.flip(np.minimum.accumulate(np.flip(growth))) >= 0
    ok_suffix[:i0] = False
    if not ok_suffix.any():
        raise OutOfRegimeError(
            "grid too short to certify R1 (growth condition never holds to the edge)"
        )
    i1 = int(np.argmax(ok_suffix))
    return R0, float(r[i1])


def _cumtrapz(y: np.ndarray, x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def build_f(profile: RateProfile) -> RateProfile:
    """Fill phi, Phi, g, f, f', set c, and verify the differential inequality.

    The finite-difference check runs at every interior grid point except one
    cell around R0 and R1 (both are kinks: the input kappa may jump at R0, and
    g' jumps at R1, so a central stencil straddling either point is polluted);
    tolerance 1e-6 * a. A violation raises ConstructionError naming the worst
    radius.

    When kappa jumps exactly at a grid node, tabulate kappa_tilde with its
    left limit there: the trapezoid cell closing the inner piece then
    integrates its piece exactly, and the inequality holds at every interior
    node (the drift term keeps the right-limit kappa).
    """
    if profile.R0 is None or profile.R1 is None:
        R0, R1 = compute_R0_R1(profile.r, profile.kappa, profile.a, profile.b)
        profile = replace(profile, R0=R0, R1=R1)
    r = profile.r
    a, b = profile.a, profile.b
    kt = profile.kappa_tilde

    phi = np.exp(-(b / a) * _cumtrapz(kt * r, r))
    Phi = _cumtrapz(phi, r)
    ratio = Phi / phi
    I_cum = _cumtrapz(ratio, r)
    i1 = int(np.searchsorted(r, profile.R1))
    I = float(I_cum[i1])
    if I <= 0:
        raise ConstructionError("degenerate construction: int_0^R1 Phi/phi <= 0")

    g = np.full_like(r, 0.5)
    g[: i1 + 1] = 1.0 - I_cum[: i1 + 1] / (2.0 * I)
    f_prime = phi * g
    f = _cumtrapz(f_prime, r)
    c = (a / 2.0) / I

    i_tail = int(np.searchsorted(r, min(2.0 * profile.R1, r[-1])))
    tail_K = float(np.min(profile.kappa[i1 : max(i1 + 1, i_tail + 1)]))

    built = replace(
        profile, phi=phi, Phi=Phi, g=g, f=f, f_prime=f_prime, c=c, tail_K=tail_K
    )

    h = float(r[1] - r[0])
    fpp = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h**2
    lhs = a * fpp - b * profile.kappa[1:-1] * r[1:-1] * f_prime[1:-1]
    rhs = -c * f[1:-1]
    margin = lhs - rhs  # must be <= tol
    interior_r = r[1:-1]
    keep = (np.abs(interior_r - profile.R0) > 1.001 * h) & (
        np.abs(interior_r - profile.R1) > 1.001 * h
    )
    tol = 1e-6 * a
    bad = margin[keep] > tol
    if bad.any():
        worst = interior_r[keep][np.argmax(margin[keep])]
        raise ConstructionError(
            f"differential inequality violated by {margin[keep].max():.3e} "
            f"(tol {tol:.1e}); worst radius r = {worst:.6g}"
        )
    return built


def make_rate_profile(
    kappa_fn: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    *,
    n_grid: int = GRID_POINTS,
    r_max_floor: float = 10.0,
) -> RateProfile:
    """Tabulate a callable profile and run the full construction.

    A pilot pass locates R1; the final uniform grid covers [0, max(2 R1,
    r_max_floor)] with ``n_grid`` points, and build_f runs on it.
    """
    pilot_r = np.linspace(0.0, r_max_floor, n_grid)
    pilot_k = np.asarray(kappa_fn(pilot_r), dtype=float)
    _, R1_pilot = compute_R0_R1(pilot_r, pilot_k, a, b)

    r = np.linspace(0.0, max(2.0 * R1_pilot, r_max_floor), n_grid)
    k = np.asarray(kappa_fn(r), dtype=float)
    profile = RateProfile(
        r=r, kappa=k, kappa_tilde=negative_part_profile(k), a=float(a), b=float(b)
    )
    R0, R1 = compute_R0_R1(r, k, a, b)
    return build_f(replace(profile, R0=R0, R1=R1))


def closed_form_c(beta: float, kappa: float, R: float) -> float:
    """Closed-form contraction constant for a constant-kappa tail and radius R.

    c = 4/beta * ((e-1) R^2 / 2 + sqrt(8 / (beta kappa)) R e^(pi/4)
        + 4 / (beta kappa))^(-1);  R = 0 collapses to exactly kappa.
    """
    if beta <= 0 or kappa <= 0:
        raise ContractViolation("beta and kappa must be positive")
    if R < 0:
        raise ContractViolation("R must be nonnegative")
    if R == 0.0:
        return float(kappa)
    denom = (
        (math.e - 1.0) * R**2 / 2.0
        + math.sqrt(8.0 / (beta * kappa)) * R * math.exp(math.pi / 4.0)
        + 4.0 / (beta * kappa)
    )
    return float(4.0 / beta / denom)


def bracket_c(a: float, b: float, K: float, m: float, R: float) -> tuple[float, float]:
    """Two-sided bracket [a/(2X), a/X] for c on the piecewise profile.

    X = (e-1) R^2 / 2 + sqrt(2a/(bK)) R e^(pi/4) + a/(bK). Valid under the
    radius condition R <= sqrt(a pi / (2 b m)) (vacuous when m = 0); outside
    that regime OutOfRegimeError is raised. The endpoints differ by exactly 2.
    """
    if a <= 0 or b <= 0 or K <= 0:
        raise ContractViolation("a, b, K must be positive")
    if m < 0 or R < 0:
        raise ContractViolation("m and R must be nonnegative")
    if m > 0 and R > math.sqrt(a * math.pi / (2.0 * b * m)):
        raise OutOfRegimeError(
            f"radius condition fails: R = {R:.6g} > sqrt(a pi / (2 b m)) = "
            f"{math.sqrt(a * math.pi / (2.0 * b * m)):.6g}"
        )
    X = (
        (math.e - 1.0) * R**2 / 2.0
        + math.sqrt(2.0 * a / (b * K)) * R * math.exp(math.pi / 4.0)
        + a / (b * K)
    )
    return float(a / (2.0 * X)), float(a / X)


@dataclass(frozen=True)
class AdmissibilityReport:
    """Theorem-level admissibility of a kernel geometry at given (beta, eta, gamma).

    The three boolean conditions gate the contraction guarantee; predicted_c
    is the certified decay constant (1 - slack) * min(c1, eta c2) and A the
    prefactor weight 2 max(1/phi1, 1/(gamma phi2)).
    """

    R_condition: bool
    LX_condition: bool
    LY_condition: bool
    c1: float
    c2: float
    phi1_R: float
    phi2_R: float
    predicted_c: float
    A: float
    r_bound: float
    lx_bound: float
    ly_bound: float

    @property
    def admissible(self) -> bool:
        return self.R_condition and self.LX_condition and self.LY_condition


def admissibility(
    geometry, beta: float, eta: float, gamma: float, *, slack: float = 0.01
) -> AdmissibilityReport:
    """Evaluate the contraction guarantee's hypotheses for a kernel geometry.

    ``geometry`` needs attributes kappa_x, kappa_y, m_x, m_y, R, L_X, L_Y.
    phi_i(R) is evaluated with the constant inside-R nonconvexity bound m_i
    (kappa~_i <= m_i inside R), giving exp(-beta m_i R^2 / 8).
    """
    if beta <= 0 or eta <= 0 or gamma <= 0:
        raise ContractViolation("beta, eta, gamma must be positive")
    R = float(geometry.R)
    m_x, m_y = float(geometry.m_x), float(geometry.m_y)

    def side_bound(m: float) -> float:
        return float("inf") if m <= 0 else math.sqrt(2.0 * math.pi / beta / m)

    r_bound = min(side_bound(m_x), side_bound(m_y))
    phi1 = math.exp(-beta * m_x * R**2 / 8.0)
    phi2 = math.exp(-beta * m_y * R**2 / 8.0)
    c1 = closed_form_c(beta, float(geometry.kappa_x), R)
    c2 = closed_form_c(beta, float(geometry.kappa_y), R)
    lx_bound = c1 * phi1 / (2.0 * gamma * eta)
    ly_bound = 0.5 * c2 * gamma * eta * phi2
    predicted = (1.0 - slack) * min(c1, eta * c2)
    A = 2.0 * max(1.0 / phi1, (1.0 / gamma) / phi2)
    return AdmissibilityReport(
        R_condition=R <= r_bound,
        LX_condition=float(geometry.L_X) <= lx_bound,
        LY_condition=float(geometry.L_Y) <= ly_bound,
        c1=c1,
        c2=c2,
        phi1_R=phi1,
        phi2_R=phi2,
        predicted_c=predicted,
        A=A,
        r_bound=r_bound,
        lx_bound=lx_bound,
        ly_bound=ly_bound,
    )


def piecewise_kappa(m: float, K: float, R: float) -> Callable[[np.ndarray], np.ndarray]:
    """Profile equal to -m strictly inside radius R and K at and beyond it."""

    def profile(r):
        r = np.asarray(r, dtype=float)
        return np.where(r < R, -float(m), float(K))

    return profile


def benchmark_kappa(
    kappa: float, eps_nc: float, omega: float
) -> Callable[[np.ndarray], np.ndarray]:
    """Analytic profile lower bound kappa - eps_nc w min(w r, 2) / r of the benchmark kernel.

    At r = 0 the bound continues to kappa - eps_nc w^2 (the limit).
    """

    def profile(r):
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            drop = np.where(r > 0, np.minimum(omega * r, 2.0) / r, omega)
        return kappa - eps_nc * omega * drop

    return profile
