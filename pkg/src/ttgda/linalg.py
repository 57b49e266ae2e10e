"""Dense linear-algebra kernel used by every other module.

Thin, deterministic wrappers around LAPACK-backed routines: eigenvalues with
a fixed (Re, Im) ordering, descending singular values, orthogonal projection
onto the kernel of a symmetric PSD matrix, and exact propagation of linear
ODEs by matrix exponential. Everything here is a pure function of its
arguments; there is no shared state, so concurrent use is safe.

Scale target is desk-sized dense matrices (a few hundred rows), which is all
the experiments need.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ContractViolation, DimensionError, NumericalError

__all__ = [
    "Spectrum",
    "as_matrix",
    "eigenvalues",
    "singular_values",
    "condition_number",
    "kernel_projection",
    "propagate_linear",
    "propagator",
]


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues sorted lexicographically by (Re, Im), optional eigenvectors.

    When present, ``eigenvectors[:, k]`` belongs to ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None = None

    @property
    def min_real(self) -> float:
        return float(self.eigenvalues.real.min())


def as_matrix(A, *, square: bool = False, name: str = "A") -> np.ndarray:
    """Validate and return A as a float (or complex) 2-D array.

    Raises DimensionError for wrong rank or (if requested) non-square shape,
    ContractViolation for non-finite entries.
    """
    M = np.asarray(A)
    if M.ndim != 2 or M.shape[0] < 1 or M.shape[1] < 1:
        raise DimensionError(f"{name} must be a 2-D matrix, got shape {M.shape}")
    if not np.issubdtype(M.dtype, np.number):
        raise ContractViolation(f"{name} must be numeric, got dtype {M.dtype}")
    if not np.all(np.isfinite(M)):
        raise ContractViolation(f"{name} contains non-finite entries")
    if square and M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    if not np.issubdtype(M.dtype, np.complexfloating):
        M = M.astype(float)
    return M


def eigenvalues(A, *, with_vectors: bool = False) -> Spectrum:
    """Full spectrum of a square matrix, deterministically ordered by (Re, Im)."""
    M = as_matrix(A, square=True)
    try:
        if with_vectors:
            w, V = np.linalg.eig(M)
        else:
            w = np.linalg.eigvals(M)
            V = None
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure is rare
        raise NumericalError(f"eigenvalue iteration failed: {exc}") from exc
    order = np.lexsort((w.imag, w.real))
    w = w[order]
    if V is not None:
        V = V[:, order]
    return Spectrum(w, V)


def singular_values(A) -> np.ndarray:
    """Singular values of A in descending order."""
    M = as_matrix(A)
    return scipy.linalg.svdvals(M)


def condition_number(A) -> float:
    """sigma_max / sigma_min; inf when the smallest singular value is zero."""
    s = singular_values(A)
    if s[-1] == 0.0:
        return float("inf")
    return float(s[0] / s[-1])


def kernel_projection(A, tol: float | None = None) -> np.ndarray:
    """Orthogonal projector onto the kernel of a symmetric PSD matrix.

    Eigenvalues with magnitude at most ``tol`` (default 1e-10 * max(1, ||A||_2))
    count as zero. Asymmetry beyond 1e-8 * max(1, ||A||) or an eigenvalue
    below -tol raises ContractViolation.
    """
    M = as_matrix(A, square=True)
    scale = max(1.0, float(np.linalg.norm(M, 2)))
    asym = float(np.linalg.norm(M - M.T, 2))
    if asym > 1e-8 * scale:
        raise ContractViolation(
            f"kernel_projection requires a symmetric matrix; ||A - A^T|| = {asym:.3e}"
        )
    Msym = 0.5 * (M + M.T)
    if tol is None:
        tol = 1e-10 * scale
    w, V = np.linalg.eigh(Msym)
    if w[0] < -tol:
        raise ContractViolation(
            f"kernel_projection requires PSD input; min eigenvalue {w[0]:.3e} < -tol"
        )
    kernel = np.abs(w) <= tol
    Vk = V[:, kernel]
    P = Vk @ Vk.T
    return 0.5 * (P + P.T)


def propagator(A, t: float) -> np.ndarray:
    """exp(-A t) for the flow dphi/dt = -A phi (scaling-and-squaring Pade)."""
    M = as_matrix(A, square=True)
    if t < 0:
        raise ContractViolation(f"propagation time must be nonnegative, got {t}")
    return scipy.linalg.expm(-M * float(t))


def propagate_linear(A, phi0, t: float) -> np.ndarray:
    """Solution of dphi/dt = -A phi at time t from phi(0) = phi0."""
    M = as_matrix(A, square=True)
    v = np.asarray(phi0, dtype=float).reshape(-1)
    if v.shape[0] != M.shape[0]:
        raise DimensionError(
            f"state length {v.shape[0]} does not match matrix size {M.shape[0]}"
        )
    return propagator(M, t) @ v
