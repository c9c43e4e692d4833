import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radiobo.lbfgsb import (
    GRADIENT_TOL,
    LINE_SEARCH_FAILED,
    BoxProblem,
    NonFiniteObjectiveError,
    OptOptions,
    minimize,
    projected_gradient,
)


def rosenbrock(x):
    f = (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2
    g = np.array([-2 * (1 - x[0]) - 400 * x[0] * (x[1] - x[0] ** 2), 200 * (x[1] - x[0] ** 2)])
    return f, g


def box(lo, hi, fun):
    return BoxProblem(np.asarray(lo, float), np.asarray(hi, float), fun)


def recording(fun, seen):
    def wrapped(x):
        seen.append(np.array(x))
        return fun(x)

    return wrapped


def test_interior_quadratic():
    res = minimize(box([-1, -1], [1, 1], lambda x: (x @ x, 2 * x)), [0.5, -0.5])
    np.testing.assert_allclose(res.x_star, 0.0, atol=1e-8)
    assert res.f_star < 1e-14
    assert res.converged


def test_bound_active_optimum():
    res = minimize(box([0], [1], lambda x: ((x[0] - 2) ** 2, np.array([2 * (x[0] - 2)]))), [0.5])
    assert res.x_star[0] == 1.0
    pg = projected_gradient(res.x_star, np.array([2 * (res.x_star[0] - 2)]), np.zeros(1), np.ones(1))
    assert pg[0] == 0.0
    assert res.termination_reason == GRADIENT_TOL


def dense_grid_refine(fun, lo, hi, levels=6, n=201):
    """Brute-force oracle: repeatedly zoom a dense grid around the best node."""
    lo, hi = np.array(lo, float), np.array(hi, float)
    for _ in range(levels):
        xs = np.linspace(lo[0], hi[0], n)
        ys = np.linspace(lo[1], hi[1], n)
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        F = fun(np.array([X, Y]))[0]
        i, j = np.unravel_index(np.argmin(F), F.shape)
        best = np.array([xs[i], ys[j]])
        half = np.array([xs[1] - xs[0], ys[1] - ys[0]]) * 4
        lo, hi = best - half, best + half
    return best


def test_rosenbrock():
    oracle = dense_grid_refine(rosenbrock, [-2, -2], [2, 2])
    np.testing.assert_allclose(oracle, [1, 1], atol=1e-5)
    seen = []
    res = minimize(box([-2, -2], [2, 2], recording(rosenbrock, seen)), [-1.2, 1.0])
    np.testing.assert_allclose(res.x_star, oracle, atol=1e-5)
    assert res.f_star < 1e-8
    assert all(np.all(np.abs(x) <= 2) for x in seen)


def test_start_clamped_into_box():
    res = minimize(box([0, 0], [1, 1], lambda x: (x @ x, 2 * x)), [5.0, -3.0])
    np.testing.assert_allclose(res.x_star, 0.0, atol=1e-8)


def test_non_finite_start_raises():
    with pytest.raises(NonFiniteObjectiveError):
        minimize(box([0], [1], lambda x: (np.nan, np.zeros(1))), [0.5])


def test_non_finite_region_returns_best_so_far():
    # finite only on x <= 0.2; the minimizer beyond it is unreachable
    def f(x):
        if x[0] > 0.2:
            return np.inf, np.array([np.nan])
        return (x[0] - 1) ** 2, np.array([2 * (x[0] - 1)])

    res = minimize(box([-1], [1], f), [0.0], OptOptions(max_backtracks=30))
    assert np.isfinite(res.f_star)
    assert res.x_star[0] <= 0.2
    assert res.f_star <= 1.0
    assert res.termination_reason in (LINE_SEARCH_FAILED, GRADIENT_TOL, "step-tolerance", "max-iterations")


def test_invalid_box():
    with pytest.raises(ValueError):
        BoxProblem(np.array([1.0]), np.array([0.0]), rosenbrock)


@given(st.integers(1, 8), st.integers(0, 10_000))
def test_convex_quadratic_iterations(n, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(n, n))
    H = A @ A.T + 0.5 * n * np.eye(n)
    b = rng.normal(size=n)
    res = minimize(
        box(np.full(n, -1e3), np.full(n, 1e3), lambda x: (0.5 * x @ H @ x - b @ x, H @ x - b)),
        rng.normal(size=n),
        OptOptions(gtol=1e-10),
    )
    assert res.converged
    assert res.iterations <= n + 5
    np.testing.assert_allclose(res.x_star, np.linalg.solve(H, b), atol=1e-8)


@given(st.integers(1, 6), st.integers(0, 10_000))
def test_feasible_and_monotone(n, seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(scale=3, size=n)
    lo, hi = -np.ones(n), np.ones(n)
    seen = []

    def f(x):
        seen.append(np.array(x))
        d = x - c
        return float(np.sum(d**4) + d @ d), 4 * d**3 + 2 * d

    x0 = rng.uniform(-2, 2, n)
    res = minimize(box(lo, hi, f), x0)
    assert all(np.all((x >= lo) & (x <= hi)) for x in seen)
    assert res.f_star <= f(np.clip(x0, lo, hi))[0]
    # separable convex problem: optimum is the clipped unconstrained minimizer
    np.testing.assert_allclose(res.x_star, np.clip(c, lo, hi), atol=1e-4)


def test_against_scipy_lbfgsb():
    scipy_opt = pytest.importorskip("scipy.optimize")
    lo, hi = [-0.5, 0.5], [0.8, 2.0]
    ref = scipy_opt.minimize(
        rosenbrock, [-1.2, 1.0], jac=True, method="L-BFGS-B", bounds=list(zip(lo, hi)), options={"gtol": 1e-10}
    )
    res = minimize(box(lo, hi, rosenbrock), [-1.2, 1.0], OptOptions(gtol=1e-10))
    np.testing.assert_allclose(res.x_star, ref.x, atol=1e-6)


def test_linear_objective_reaches_far_bound_quickly():
    # No curvature at all: the step must grow instead of creeping.
    res = minimize(box([0.0, 0.0], [1e6, 1e6], lambda x: (-x.sum(), -np.ones(2))), [0.0, 0.0])
    np.testing.assert_array_equal(res.x_star, [1e6, 1e6])
    assert res.iterations <= 5


def test_concave_valley_escapes():
    # Concave in x[0] near the start, convex far out; minimum on the upper bound.
    def fun(x):
        return -x[0] ** 3 / 3 + (x[1] - 1) ** 2, np.array([-x[0] ** 2, 2 * (x[1] - 1)])

    res = minimize(box([0.1, -5], [50, 5], fun), [0.1, 0.0])
    assert res.x_star[0] == 50.0
    # gtol bounds |2 (x1 - 1)| by 1e-5
    assert res.x_star[1] == pytest.approx(1.0, abs=5e-6)
    assert res.converged and res.iterations < 30
