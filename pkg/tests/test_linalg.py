import numpy as np
import pytest

from ttgda.errors import DimensionError
from ttgda.linalg import (
    condition_number,
    eigenvalues,
    kernel_projection,
    propagate_linear,
    propagator,
    singular_values,
)


def test_eigenvalues_identity():
    spec = eigenvalues(np.eye(3))
    assert np.allclose(spec.eigenvalues, np.ones(3))
    assert spec.min_real == pytest.approx(1.0, abs=1e-14)


def test_eigenvalues_rotation_pure_imaginary():
    spec = eigenvalues(np.array([[0.0, 1.0], [-1.0, 0.0]]))
    got = sorted(spec.eigenvalues, key=lambda z: z.imag)
    assert np.allclose(got, [-1j, 1j], atol=1e-14)
    assert spec.min_real == pytest.approx(0.0, abs=1e-14)


def test_eigenvalues_companion_polynomial_oracle():
    # independent route: characteristic polynomial coefficients -> roots
    rng = np.random.default_rng(4)
    A = rng.standard_normal((4, 4))
    got = np.sort_complex(eigenvalues(A).eigenvalues)
    oracle = np.sort_complex(np.roots(np.poly(A)))
    assert np.allclose(got, oracle, atol=1e-8)


def test_eigenvalues_with_vectors_residual():
    rng = np.random.default_rng(7)
    A = rng.standard_normal((5, 5))
    spec = eigenvalues(A, with_vectors=True)
    for lam, v in zip(spec.eigenvalues, spec.eigenvectors.T):
        assert np.linalg.norm(A @ v - lam * v) < 1e-10 * np.linalg.norm(A)


def test_singular_values_diagonal():
    assert np.allclose(singular_values(np.eye(2)), [1.0, 1.0])
    assert np.allclose(singular_values(np.diag([10.0, 1.0])), [10.0, 1.0])


def test_singular_values_gram_oracle():
    rng = np.random.default_rng(11)
    A = rng.standard_normal((5, 3))
    oracle = np.sqrt(np.maximum(np.linalg.eigvalsh(A.T @ A), 0.0))[::-1]
    assert np.allclose(np.sort(singular_values(A))[::-1], oracle, atol=1e-10)


def test_condition_number():
    assert condition_number(np.diag([10.0, 1.0])) == pytest.approx(10.0)
    assert condition_number(np.eye(4)) == pytest.approx(1.0)


def test_kernel_projection_trivial_cases():
    assert np.allclose(kernel_projection(np.zeros((3, 3))), np.eye(3))
    assert np.allclose(kernel_projection(np.eye(3)), np.zeros((3, 3)))
    assert np.allclose(kernel_projection(np.diag([1.0, 0.0])), np.diag([0.0, 1.0]))


@pytest.mark.parametrize("n,rank", [(4, 2), (5, 0), (6, 6), (3, 1)])
def test_kernel_projection_is_orthogonal_projector(n, rank):
    rng = np.random.default_rng(100 + n + rank)
    B = rng.standard_normal((rank, n)) if rank else np.zeros((1, n))
    A = B.T @ B  # PSD with kernel of dimension n - rank
    P = kernel_projection(A)
    assert np.allclose(P @ P, P, atol=1e-10)
    assert np.allclose(P, P.T, atol=1e-12)
    assert np.linalg.norm(A @ P) < 1e-8 * max(1.0, np.linalg.norm(A))
    assert np.trace(P) == pytest.approx(n - np.linalg.matrix_rank(A), abs=1e-8)


def test_propagator_zero_matrix_is_identity():
    assert np.allclose(propagator(np.zeros((3, 3)), 2.5), np.eye(3))


def test_propagator_scalar_decay():
    a, t = 0.7, 1.3
    E = propagator(a * np.eye(2), t)
    assert np.allclose(E, np.exp(-a * t) * np.eye(2), atol=1e-12)


def test_propagate_linear_rk4_oracle():
    # independent fine-step classical Runge-Kutta integration of dphi/dt = -A phi
    rng = np.random.default_rng(21)
    A = rng.standard_normal((4, 4))
    phi0 = rng.standard_normal(4)
    t = 0.8
    n_steps = 4000
    h = t / n_steps
    phi = phi0.copy()
    for _ in range(n_steps):
        k1 = -A @ phi
        k2 = -A @ (phi + 0.5 * h * k1)
        k3 = -A @ (phi + 0.5 * h * k2)
        k4 = -A @ (phi + h * k3)
        phi = phi + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    got = propagate_linear(A, phi0, t)
    assert np.linalg.norm(got - phi) < 1e-7
    assert np.allclose(got, propagator(A, t) @ phi0, atol=1e-12)


def test_dimension_errors():
    with pytest.raises(DimensionError):
        eigenvalues(np.ones((2, 3)))
    with pytest.raises(DimensionError):
        propagate_linear(np.eye(2), np.ones(3), 1.0)
