import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ttgda.errors import (
    ConstructionError,
    ContractViolation,
    DimensionError,
    DivergenceError,
    StepSizeError,
)
from ttgda.meanfield import (
    ContractionParams,
    CoupledPair,
    GameKernel,
    KernelGeometry,
    ParticleSystem,
    _step_arrays,
    contraction_experiment,
    counter_normals,
    coupled_step,
    default_distance_functions,
    kappa_profile,
    make_benchmark_kernel,
    make_coupled_pair,
    mne_fixed_point,
    rc_weight,
    step_particles,
    wasserstein1,
)

BENCH = make_benchmark_kernel(1.0, 1.0, 0.1, 0.05, 2.0)


def zero_kernel(dim):
    """Driftless kernel: pure noise dynamics."""
    geo = KernelGeometry(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    zero = lambda x, y: np.zeros_like(x)
    return GameKernel(
        dim_x=dim,
        dim_y=dim,
        evaluate=lambda x, y: 0.0,
        grad_x=lambda x, y: np.zeros_like(np.atleast_2d(x)),
        grad_y=lambda x, y: np.zeros_like(np.atleast_2d(y)),
        geometry=geo,
        mean_grad_x=lambda X, Y: np.zeros_like(X),
        mean_grad_y=lambda X, Y: np.zeros_like(Y),
    )


# ---------------------------------------------------------------- RNG stream


def test_counter_normals_reproducible():
    a = counter_normals(7, 3, 0, (4, 2))
    b = counter_normals(7, 3, 0, (4, 2))
    assert np.array_equal(a, b)
    assert a.shape == (4, 2)
    # distinct roles and steps give independent draws
    assert not np.allclose(a, counter_normals(7, 3, 1, (4, 2)))
    assert not np.allclose(a, counter_normals(7, 4, 0, (4, 2)))
    assert not np.allclose(a, counter_normals(8, 3, 0, (4, 2)))


# ------------------------------------------------------------ kernel algebra


def test_benchmark_kernel_rejects_dominant_oscillation():
    with pytest.raises(ConstructionError):
        make_benchmark_kernel(1.0, 1.0, 0.1, 0.3, 2.0)  # 0.3 * 4 >= 1
    with pytest.raises(ConstructionError):
        make_benchmark_kernel(-1.0, 1.0, 0.1, 0.0, 0.0)


def test_benchmark_kernel_geometry_constants():
    g = BENCH.geometry
    assert g.L_X == g.L_Y == 0.1
    assert g.l_X == g.l_Y == pytest.approx(1.0 + 0.05 * 4.0)
    assert g.m_x == g.m_y == 0.0  # 0.05 * 4 < 1: convexity survives everywhere
    assert g.R == pytest.approx(4.0 * 0.05 * 2.0 / 1.0)
    # sharp outside-R constant: kappa - eps w min(wR, 2)/R with wR = 0.8
    assert g.kappa_x == pytest.approx(1.0 - 0.05 * 4.0)
    assert g.kappa_y == pytest.approx(1.0 - 0.05 * 4.0)
    smooth = make_benchmark_kernel(2.0, 3.0, 0.5, 0.0, 0.0)
    assert smooth.geometry.R == 0.0
    assert smooth.geometry.kappa_x == 2.0 and smooth.geometry.kappa_y == 3.0


def test_geometry_constants_bound_sampled_rayleigh_quotients():
    g = BENCH.geometry
    rng = np.random.default_rng(1)
    n = 50_000
    x = rng.normal(scale=3.0, size=(n, 1))
    y = rng.normal(scale=3.0, size=(n, 1))
    d = (g.R + rng.exponential(2.0, size=(n, 1))) * np.where(
        rng.random((n, 1)) < 0.5, -1.0, 1.0
    )
    xp = x + d
    rq_x = np.sum((BENCH.grad_x(x, y) - BENCH.grad_x(xp, y)) * (x - xp), axis=1)
    rq_x /= np.sum((x - xp) ** 2, axis=1)
    assert rq_x.min() >= g.kappa_x - 1e-9  # declared constant is a valid bound
    assert rq_x.min() <= g.kappa_x * 1.05  # and a sharp one
    yp = y + d
    rq_y = -np.sum((BENCH.grad_y(x, y) - BENCH.grad_y(x, yp)) * (y - yp), axis=1)
    rq_y /= np.sum((y - yp) ** 2, axis=1)
    assert rq_y.min() >= g.kappa_y - 1e-9
    assert rq_y.min() <= g.kappa_y * 1.05
    # cross-Lipschitz is exactly a (bilinear term)
    lx = np.abs(BENCH.grad_x(x, y) - BENCH.grad_x(x, yp))[:, 0] / np.abs(y - yp)[:, 0]
    assert lx.max() == pytest.approx(g.L_X, abs=1e-12)
    # own-gradient Lipschitz bound
    ds = rng.normal(scale=0.5, size=(n, 1))
    lox = np.abs(BENCH.grad_x(x, y) - BENCH.grad_x(x + ds, y))[:, 0] / np.abs(ds)[:, 0]
    assert lox.max() <= g.l_X + 1e-9
    assert lox.max() >= 0.9 * g.l_X


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(3)
    k = make_benchmark_kernel(1.3, 0.8, 0.25, 0.04, 2.0, dim=2)
    h = 1e-6
    for _ in range(20):
        x, y = rng.standard_normal(2), rng.standard_normal(2)
        gx, gy = k.grad_x(x, y), k.grad_y(x, y)
        for i in range(2):
            dx = np.zeros(2)
            dx[i] = h
            fd_x = (k.evaluate(x + dx, y) - k.evaluate(x - dx, y)) / (2 * h)
            fd_y = (k.evaluate(x, y + dx) - k.evaluate(x, y - dx)) / (2 * h)
            assert gx[i] == pytest.approx(fd_x, abs=1e-5)
            assert gy[i] == pytest.approx(fd_y, abs=1e-5)


def test_mean_gradients_match_explicit_average():
    rng = np.random.default_rng(5)
    X, Y = rng.standard_normal((6, 1)), rng.standard_normal((4, 1))
    gx = BENCH.mean_grad_x(X, Y)
    oracle = np.stack(
        [np.mean([BENCH.grad_x(X[i], Y[j]) for j in range(4)], axis=0) for i in range(6)]
    )
    assert np.allclose(gx, oracle, atol=1e-12)
    gy = BENCH.mean_grad_y(X, Y)
    oracle_y = np.stack(
        [np.mean([BENCH.grad_y(X[i], Y[j]) for i in range(6)], axis=0) for j in range(4)]
    )
    assert np.allclose(gy, oracle_y, atol=1e-12)


def test_evaluate_grid_matches_pointwise():
    xs = np.linspace(-2, 2, 7).reshape(-1, 1)
    ys = np.linspace(-1, 3, 5).reshape(-1, 1)
    grid = BENCH.evaluate_grid(xs, ys)
    for i in range(7):
        for j in range(5):
            assert grid[i, j] == pytest.approx(BENCH.evaluate(xs[i], ys[j]), abs=1e-12)


# ------------------------------------------------------------ particle steps


def test_particle_system_validation():
    with pytest.raises(ContractViolation):
        ParticleSystem(X=np.zeros((3, 1)), Y=np.zeros((2, 1)), beta=1.0, eta=1.0)
    with pytest.raises(ContractViolation):
        ParticleSystem(X=np.zeros((2, 1)), Y=np.zeros((2, 1)), beta=0.0, eta=1.0)
    with pytest.raises(ContractViolation):
        ParticleSystem(X=np.full((2, 1), np.nan), Y=np.zeros((2, 1)), beta=1.0, eta=1.0)
    sys = ParticleSystem(X=np.zeros((5, 2)), Y=np.ones((5, 1)), beta=np.inf, eta=0.5)
    assert sys.n_particles == 5


def test_zero_temperature_zero_gradient_is_fixed_point():
    sys = ParticleSystem(
        X=np.arange(6.0).reshape(3, 2), Y=np.ones((3, 2)), beta=np.inf, eta=2.0
    )
    out = step_particles(sys, zero_kernel(2), dt=0.05, seed=0)
    assert np.array_equal(out.X, sys.X)
    assert np.array_equal(out.Y, sys.Y)
    assert out.t == pytest.approx(0.05)
    assert out.step_count == 1


def test_single_particle_gradient_descent_decay():
    # beta = inf, a = 0: X follows dX/dt = -kappa X
    k = make_benchmark_kernel(1.0, 1.0, 0.0, 0.0, 0.0)
    sys = ParticleSystem(X=[[2.0]], Y=[[1.0]], beta=np.inf, eta=1.0)
    dt, t_end = 0.001, 1.0
    for _ in range(int(t_end / dt)):
        sys = step_particles(sys, k, dt, seed=9)
    assert sys.X[0, 0] == pytest.approx(2.0 * np.exp(-1.0), rel=2e-3)
    assert sys.Y[0, 0] == pytest.approx(1.0 * np.exp(-1.0), rel=2e-3)


def test_ou_stationary_variance():
    # kappa = 1, a = 0, beta = 2: stationary variance 1/(beta kappa) = 0.5
    k = make_benchmark_kernel(1.0, 1.0, 0.0, 0.0, 0.0)
    rng = np.random.default_rng(0)
    sys = ParticleSystem(
        X=rng.standard_normal((2000, 1)),
        Y=rng.standard_normal((2000, 1)),
        beta=2.0,
        eta=1.0,
    )
    for _ in range(1000):
        sys = step_particles(sys, k, 0.02, seed=11)
    assert np.var(sys.X) == pytest.approx(0.5, rel=0.1)
    assert np.var(sys.Y) == pytest.approx(0.5, rel=0.1)


def test_step_particles_deterministic_in_seed():
    rng = np.random.default_rng(2)
    sys = ParticleSystem(
        X=rng.standard_normal((16, 1)), Y=rng.standard_normal((16, 1)), beta=1.0, eta=1.0
    )
    a = step_particles(sys, BENCH, 0.01, seed=5)
    b = step_particles(sys, BENCH, 0.01, seed=5)
    c = step_particles(sys, BENCH, 0.01, seed=6)
    assert np.array_equal(a.X, b.X) and np.array_equal(a.Y, b.Y)
    assert not np.allclose(a.X, c.X)


def test_step_size_gate_and_divergence():
    with pytest.raises(StepSizeError):
        sys = ParticleSystem(X=[[0.0]], Y=[[0.0]], beta=1.0, eta=10.0)
        step_particles(sys, BENCH, dt=0.05, seed=0)  # 0.05 * 10 * 1.2 >= 0.5
    geo = KernelGeometry(1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    blowup = GameKernel(
        dim_x=1,
        dim_y=1,
        evaluate=lambda x, y: 0.0,
        grad_x=lambda x, y: np.atleast_2d(x) * 1e160,
        grad_y=lambda x, y: np.zeros_like(np.atleast_2d(y)),
        geometry=geo,
        mean_grad_x=lambda X, Y: X * 1e160,
        mean_grad_y=lambda X, Y: np.zeros_like(Y),
    )
    sys = ParticleSystem(X=[[1.0]], Y=[[0.0]], beta=np.inf, eta=1.0)
    with pytest.raises(DivergenceError), np.errstate(over="ignore"):
        for _ in range(4):
            sys = step_particles(sys, blowup, 0.1, seed=0)


def test_update_is_exchangeable():
    rng = np.random.default_rng(8)
    X, Y = rng.standard_normal((8, 1)), rng.standard_normal((8, 1))
    nx, ny = rng.standard_normal((8, 1)), rng.standard_normal((8, 1))
    perm = rng.permutation(8)
    X1, Y1 = _step_arrays(BENCH, X, Y, 1.5, 0.01, nx, ny)
    X2, Y2 = _step_arrays(BENCH, X[perm], Y[perm], 1.5, 0.01, nx[perm], ny[perm])
    assert np.allclose(X2, X1[perm], atol=1e-14)
    assert np.allclose(Y2, Y1[perm], atol=1e-14)


# ----------------------------------------------------------------- coupling


def test_rc_weight_ramp():
    delta = 2.0
    r = np.array([0.0, 0.5, 1.0, 1.5, 2.0, 5.0])
    expect = np.array([0.0, 0.0, 0.0, 0.5, 1.0, 1.0])
    assert np.allclose(rc_weight(r, delta), expect)


@settings(max_examples=60, deadline=None)
@given(
    r=st.floats(0.0, 1e6, allow_nan=False),
    delta=st.floats(1e-6, 1e3, allow_nan=False),
)
def test_rc_weight_properties(r, delta):
    w = float(rc_weight(np.array([r]), delta)[0])
    assert 0.0 <= w <= 1.0
    if r <= delta / 2:
        assert w == 0.0
    if r >= delta:
        assert w == 1.0


def test_make_coupled_pair_validation():
    rng = np.random.default_rng(1)
    a = ParticleSystem(X=rng.standard_normal((8, 1)), Y=rng.standard_normal((8, 1)), beta=1.0, eta=1.0)
    b = ParticleSystem(X=rng.standard_normal((4, 1)), Y=rng.standard_normal((4, 1)), beta=1.0, eta=1.0)
    f = lambda r: r
    with pytest.raises(ContractViolation):
        make_coupled_pair(a, b, delta=1.0, gamma=1.0, seed=0, f1=f, f2=f)
    with pytest.raises(ContractViolation):
        make_coupled_pair(a, a, delta=0.0, gamma=1.0, seed=0, f1=f, f2=f)


def test_identical_legs_stay_identical():
    rng = np.random.default_rng(4)
    sys = ParticleSystem(
        X=rng.standard_normal((32, 1)), Y=rng.standard_normal((32, 1)), beta=1.0, eta=1.0
    )
    f = lambda r: r
    pair = make_coupled_pair(sys, sys, delta=0.5, gamma=1.0, seed=3, f1=f, f2=f)
    for _ in range(25):
        coupled_step(pair, BENCH, 0.01)
    assert np.array_equal(pair.primary.X, pair.mirror.X)
    assert np.array_equal(pair.primary.Y, pair.mirror.Y)
    trace = pair.trace_array()
    assert np.allclose(trace[:, 1:], 0.0)


def test_reflected_difference_grows_like_additive_noise():
    # zero drift, full reflection: |Z| is a 1-d random walk with variance 8t/beta
    rng = np.random.default_rng(6)
    N, dim, beta = 2000, 3, 1.0
    X = rng.standard_normal((N, dim))
    prim = ParticleSystem(X=X + 2.0, Y=np.zeros((N, dim)), beta=beta, eta=1.0)
    mirr = ParticleSystem(X=X - 2.0, Y=np.zeros((N, dim)), beta=beta, eta=1.0)
    f = lambda r: r
    pair = make_coupled_pair(prim, mirr, delta=1e-9, gamma=1.0, seed=12, f1=f, f2=f)
    dt, steps = 0.002, 50
    for _ in range(steps):
        coupled_step(pair, zero_kernel(dim), dt)
    z_norms = np.linalg.norm(pair.primary.X - pair.mirror.X, axis=1)
    t = dt * steps
    assert np.var(z_norms) == pytest.approx(8.0 * t / beta, rel=0.15)


def test_coupled_distance_contracts_for_benchmark():
    rng = np.random.default_rng(7)
    N = 256
    base_x = rng.standard_normal((N, 1))
    base_y = rng.standard_normal((N, 1))
    prim = ParticleSystem(X=base_x + 2.0, Y=base_y + 2.0, beta=1.0, eta=1.0)
    mirr = ParticleSystem(X=base_x - 2.0, Y=base_y - 2.0, beta=1.0, eta=1.0)
    kernel = make_benchmark_kernel(1.0, 1.0, 0.25, 0.0, 0.0)
    f1, f2 = default_distance_functions(kernel, beta=1.0)
    pair = make_coupled_pair(prim, mirr, delta=1.0, gamma=1.0, seed=2, f1=f1, f2=f2)
    for _ in range(150):
        coupled_step(pair, kernel, 0.02)
    trace = pair.trace_array()
    rho = trace[:, 1]
    assert rho[-1] < 0.15 * rho[0]
    # broadly decreasing: each point beats the running level set a while before
    assert np.all(rho[30:] < rho[:-30])


def test_default_distance_functions_modes():
    ident1, ident2 = default_distance_functions(
        make_benchmark_kernel(1.0, 1.0, 0.1, 0.0, 0.0), beta=1.0
    )
    r = np.linspace(0.0, 5.0, 11)
    assert np.allclose(ident1(r), r)
    assert np.allclose(ident2(r), r)
    f1, f2 = default_distance_functions(BENCH, beta=1.0)
    vals = f1(r)
    assert vals[0] == 0.0
    assert np.all(np.diff(vals) > 0)
    assert np.all(np.diff(np.diff(vals)) <= 1e-9)  # concave


# -------------------------------------------------------- profile estimation


def test_kappa_profile_constant_for_quadratic_kernel():
    k = make_benchmark_kernel(1.5, 0.7, 0.2, 0.0, 0.0)
    rng = np.random.default_rng(3)
    sys = ParticleSystem(
        X=rng.standard_normal((400, 1)), Y=rng.standard_normal((400, 1)), beta=1.0, eta=1.0
    )
    r = np.linspace(0.5, 3.0, 6)
    px = kappa_profile(k, sys, "X", r, n_base=200, n_dir=50)
    py = kappa_profile(k, sys, "Y", r, n_base=200, n_dir=50)
    assert np.allclose(px.kappa + px.stderr, 1.5, atol=1e-10)
    assert np.allclose(py.kappa + py.stderr, 0.7, atol=1e-10)
    assert np.allclose(px.kappa_tilde, 0.0)


def test_kappa_profile_tracks_benchmark_bound():
    rng = np.random.default_rng(9)
    sys = ParticleSystem(
        X=rng.standard_normal((500, 1)), Y=rng.standard_normal((500, 1)), beta=1.0, eta=1.0
    )
    r = np.array([0.2, 0.5, 1.0, 2.0, 4.0])
    prof = kappa_profile(BENCH, sys, "X", r, n_base=300, n_dir=60, seed=1)
    analytic = 1.0 - 0.05 * 2.0 * np.minimum(2.0 * r, 2.0) / r
    assert np.all(prof.kappa >= analytic - 3.0 * prof.stderr - 1e-9)
    assert np.all(prof.kappa <= 1.0 + 1e-9)
    with pytest.raises(ContractViolation):
        kappa_profile(BENCH, sys, "Z", r)
    with pytest.raises(ContractViolation):
        kappa_profile(BENCH, sys, "X", np.array([-1.0, 1.0]))


# ------------------------------------------------------------------- MNE


def test_mne_uniform_for_flat_kernel():
    flat = zero_kernel(1)
    grid = np.linspace(-1.0, 1.0, 64)
    pair = mne_fixed_point(flat, beta=1.0, grids=(grid, grid), tol=1e-13)
    assert np.allclose(pair.p, 1.0 / 64, atol=1e-12)
    assert np.allclose(pair.q, 1.0 / 64, atol=1e-12)


def test_mne_gibbs_for_decoupled_kernel():
    k = make_benchmark_kernel(1.0, 2.0, 0.0, 0.0, 0.0)
    beta = 1.5
    grid = np.linspace(-4.0, 4.0, 128)
    pair = mne_fixed_point(k, beta=beta, grids=(grid, grid), tol=1e-13)
    gibbs_p = np.exp(-beta * 0.5 * 1.0 * grid**2)
    gibbs_p /= gibbs_p.sum()
    gibbs_q = np.exp(-beta * 0.5 * 2.0 * grid**2)
    gibbs_q /= gibbs_q.sum()
    assert np.allclose(pair.p, gibbs_p, atol=1e-10)
    assert np.allclose(pair.q, gibbs_q, atol=1e-10)


def test_mne_benchmark_first_variation_constant():
    beta = 1.0
    grid = np.linspace(-6.0, 6.0, 256)
    pair = mne_fixed_point(BENCH, beta=beta, grids=(grid, grid))
    assert pair.residual_p < 1e-12 and pair.residual_q < 1e-12
    assert pair.iterations < 200
    assert pair.p.sum() == pytest.approx(1.0, abs=1e-12)
    K = BENCH.evaluate_grid(grid.reshape(-1, 1), grid.reshape(-1, 1))
    # first variation of the entropy-regularized game must be flat on the support
    vp = np.log(pair.p) / beta + K @ pair.q
    vq = -np.log(pair.q) / beta + K.T @ pair.p
    sup = pair.p > 1e-6
    assert vp[sup].max() - vp[sup].min() < 1e-6
    suq = pair.q > 1e-6
    assert vq[suq].max() - vq[suq].min() < 1e-6


# -------------------------------------------------------------- wasserstein


def test_w1_basic_values():
    a = np.array([0.0, 1.0, 2.0])
    assert wasserstein1(a, a) == pytest.approx(0.0, abs=1e-15)
    assert wasserstein1(a, a + 1.0) == pytest.approx(1.0, abs=1e-12)
    assert wasserstein1(np.array([0.0, 2.0]), np.array([1.0, 3.0])) == pytest.approx(
        1.0, abs=1e-12
    )
    assert wasserstein1(a, a + 1.0) == pytest.approx(wasserstein1(a + 1.0, a), abs=1e-12)


def test_w1_two_dimensional_shift():
    rng = np.random.default_rng(10)
    pts = rng.standard_normal((40, 2))
    shifted = pts + np.array([3.0, 4.0])
    assert wasserstein1(pts, shifted) == pytest.approx(5.0, rel=1e-10)


def test_w1_weighted_cases():
    got = wasserstein1(
        np.array([0.0]),
        np.array([0.0, 1.0]),
        np.array([1.0]),
        np.array([0.75, 0.25]),
    )
    assert got == pytest.approx(0.25, abs=1e-12)
    got2 = wasserstein1(
        np.array([[0.0, 0.0]]),
        np.array([[1.0, 0.0], [0.0, 1.0]]),
        np.array([1.0]),
        np.array([0.6, 0.4]),
    )
    assert got2 == pytest.approx(1.0, abs=1e-9)


def test_w1_input_validation():
    with pytest.raises(DimensionError):
        wasserstein1(np.zeros((3, 2)), np.zeros((3, 3)))
    with pytest.raises(ContractViolation):
        wasserstein1(np.array([0.0]), np.array([1.0]), np.array([-1.0]), None)


@settings(max_examples=40, deadline=None)
@given(shift=st.floats(-50.0, 50.0, allow_nan=False))
def test_w1_translation_property(shift):
    pts = np.array([-1.0, 0.0, 0.5, 2.0])
    assert wasserstein1(pts, pts + shift) == pytest.approx(abs(shift), abs=1e-9)


# ------------------------------------------------- contraction experiment


def test_contraction_experiment_decreases_and_meets_prediction():
    kernel = make_benchmark_kernel(1.0, 1.0, 0.25, 0.0, 0.0)
    params = ContractionParams(
        beta=1.0, eta=1.0, gamma=1.0, delta=1.0, N=128, dt=0.02, horizon=3.0
    )
    rep = contraction_experiment(kernel, params, seeds=range(4))
    rho = rep.mean_rho
    assert rho[-1] < 0.1 * rho[0]
    assert np.all(rho[25:] < rho[:-25])  # decreasing at coarse lag
    assert rep.fitted_rate >= 0.5 * rep.predicted_c
    assert rep.rate_ok
    assert rep.admissibility.admissible


def test_contraction_rate_insensitive_to_delta_halving():
    kernel = make_benchmark_kernel(1.0, 1.0, 0.25, 0.0, 0.0)

    def run(delta):
        params = ContractionParams(
            beta=1.0, eta=1.0, gamma=1.0, delta=delta, N=256, dt=0.005, horizon=3.0
        )
        return contraction_experiment(kernel, params, seeds=range(8)).fitted_rate

    r_full, r_half = run(1.0), run(0.5)
    assert abs(r_full - r_half) / r_full < 0.1


def test_coupling_preserves_marginal_law():
    # primary leg of the coupled pair must follow the same law as a solo run
    kernel = make_benchmark_kernel(1.0, 1.0, 0.1, 0.05, 2.0)
    N, dt, steps = 512, 0.005, 400
    rng2 = np.random.default_rng(43)
    base_x, base_y = rng2.standard_normal((N, 1)), rng2.standard_normal((N, 1))
    # solo chains from the same initial clouds as each leg, independent noise
    solo_p = ParticleSystem(X=base_x + 2.0, Y=base_y.copy(), beta=1.0, eta=1.0)
    solo_m = ParticleSystem(X=base_x - 2.0, Y=base_y.copy(), beta=1.0, eta=1.0)
    for _ in range(steps):
        solo_p = step_particles(solo_p, kernel, dt, seed=999)
        solo_m = step_particles(solo_m, kernel, dt, seed=998)
    prim = ParticleSystem(X=base_x + 2.0, Y=base_y, beta=1.0, eta=1.0)
    mirr = ParticleSystem(X=base_x - 2.0, Y=base_y, beta=1.0, eta=1.0)
    f = lambda r: r
    pair = make_coupled_pair(prim, mirr, delta=1.0, gamma=1.0, seed=100, f1=f, f2=f)
    for _ in range(steps):
        coupled_step(pair, kernel, dt)
    tol = 3.0 / np.sqrt(N)
    assert wasserstein1(solo_p.X, pair.primary.X) <= tol
    assert wasserstein1(solo_p.Y, pair.primary.Y) <= tol
    assert wasserstein1(solo_m.X, pair.mirror.X) <= tol
