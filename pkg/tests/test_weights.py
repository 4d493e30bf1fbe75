import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dhif.errors import InvalidInputError
from dhif.weights import (
    WeightProblem,
    brute_force_weights,
    ci_objective,
    fast_ci_weights,
    optimize_ci_weights,
    project_simplex,
)
from oracles import random_spd, simplex_grid_min


def random_problem(rng, m, n=4):
    return WeightProblem(tuple(random_spd(rng, n) for _ in range(m)))


def assert_feasible(w, lb):
    assert abs(w.sum() - 1.0) < 1e-12
    assert np.all(w >= lb - 1e-15)


def test_single_source():
    p = WeightProblem((np.eye(3),))
    for solve in (optimize_ci_weights, brute_force_weights, fast_ci_weights):
        np.testing.assert_array_equal(solve(p).weights, [1.0])


def test_two_scalar_sources_hit_lower_bound():
    p = WeightProblem(([[1.0]], [[2.0]]), lower_bound=0.01)
    w = optimize_ci_weights(p).weights
    np.testing.assert_allclose(w, [0.01, 0.99], atol=1e-12)
    np.testing.assert_allclose(brute_force_weights(p).weights, [0.01, 0.99], atol=1e-12)


def test_default_lower_bound():
    assert WeightProblem((np.eye(2),) * 4).lower_bound == pytest.approx(2.5e-4)


@pytest.mark.parametrize("lb", [0.0, 0.5, -0.1])
def test_lower_bound_validation(lb):
    with pytest.raises(InvalidInputError):
        WeightProblem((np.eye(2), np.eye(2)), lower_bound=lb)


def test_empty_problem():
    with pytest.raises(InvalidInputError):
        WeightProblem(())


def test_brute_force_source_limit(rng):
    with pytest.raises(InvalidInputError):
        brute_force_weights(random_problem(rng, 5))


def test_brute_force_matches_independent_grid(rng):
    p = random_problem(rng, 3, n=2)
    lb = p.lower_bound
    f = lambda lam: ci_objective(p.stacked, lb + (1 - 3 * lb) * lam)  # noqa: E731
    best, _ = simplex_grid_min(f, 3, 40)
    assert brute_force_weights(p, resolution=40).objective == pytest.approx(best, rel=1e-12)


def test_optimizer_matches_grid_on_random_4x4(rng):
    p = random_problem(rng, 3)
    opt = optimize_ci_weights(p)
    grid = brute_force_weights(p, resolution=200)
    assert opt.objective <= grid.objective + 1e-12
    assert grid.objective - opt.objective < 1e-3


def test_optimizer_matches_sdp(rng):
    cp = pytest.importorskip("cvxpy")
    for m in (2, 3, 5):
        p = random_problem(rng, m)
        n = 4
        w = cp.Variable(m)
        u = cp.Variable(n)
        S = sum(w[j] * p.infos[j] for j in range(m))
        cons = [cp.sum(w) == 1, w >= p.lower_bound, w <= 1]
        for l in range(n):
            e = np.eye(n)[:, [l]]
            cons.append(cp.bmat([[S, e], [e.T, cp.reshape(u[l], (1, 1), order="C")]]) >> 0)
        prob = cp.Problem(cp.Minimize(cp.sum(u)), cons)
        prob.solve()
        opt = optimize_ci_weights(p)
        assert opt.objective <= prob.value * (1 + 1e-5)
        assert opt.objective == pytest.approx(prob.value, rel=1e-5)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_optimizer_beats_random_feasible_points(m, seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, m)
    res = optimize_ci_weights(p)
    assert_feasible(res.weights, p.lower_bound)
    lb = p.lower_bound
    for _ in range(20):
        a = lb + (1 - m * lb) * rng.dirichlet(np.ones(m))
        b = lb + (1 - m * lb) * rng.dirichlet(np.ones(m) * 0.3)
        t = rng.random()
        assert ci_objective(p.stacked, t * a + (1 - t) * b) >= res.objective * (1 - 1e-6)


def test_optimizer_certificate_relative_gap(rng):
    # the duality gap bounds suboptimality; verify directly against a fine 1-D scan
    p = random_problem(rng, 2)
    res = optimize_ci_weights(p)
    lb = p.lower_bound
    ts = np.linspace(lb, 1 - lb, 200_001)
    vals = [ci_objective(p.stacked, [t, 1 - t]) for t in ts[::50]]
    assert res.objective <= min(vals) * (1 + 1e-6)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 5), st.floats(1e-3, 1e3), st.integers(0, 2**32 - 1))
def test_scaling_invariance(m, c, seed):
    rng = np.random.default_rng(seed)
    p = random_problem(rng, m)
    q = WeightProblem(tuple(c * X for X in p.infos))
    a, b = optimize_ci_weights(p), optimize_ci_weights(q)
    assert b.objective == pytest.approx(a.objective / c, rel=1e-6)
    np.testing.assert_allclose(a.weights, b.weights, atol=1e-3)


def test_degenerate_all_zero():
    p = WeightProblem((np.zeros((3, 3)),) * 3)
    for solve in (optimize_ci_weights, fast_ci_weights):
        r = solve(p)
        assert r.degenerate
        np.testing.assert_array_equal(r.weights, np.full(3, 1 / 3))


def test_degenerate_common_null_space():
    X = np.diag([1.0, 0.0])
    r = optimize_ci_weights(WeightProblem((X, 2 * X)))
    assert r.degenerate and r.objective == np.inf
    np.testing.assert_array_equal(r.weights, [0.5, 0.5])


def test_singular_members_with_nonsingular_sum():
    # one neighbor knows only x, the other only y: every feasible weighting is finite
    p = WeightProblem((np.diag([1.0, 0.0]), np.diag([0.0, 4.0])))
    r = optimize_ci_weights(p)
    assert not r.degenerate
    # tr = 1/w + 1/(4(1-w)) is minimized at w = 2/3
    np.testing.assert_allclose(r.weights, [2 / 3, 1 / 3], atol=1e-6)


def test_fast_weights_equal_infos():
    p = WeightProblem((np.eye(2),) * 3)
    np.testing.assert_allclose(fast_ci_weights(p).weights, np.full(3, 1 / 3))


def test_fast_weights_trace_ratio():
    p = WeightProblem((np.eye(2), 3 * np.eye(2)))
    np.testing.assert_allclose(fast_ci_weights(p).weights, [0.25, 0.75])


def test_fast_weights_clipped_to_floor():
    p = WeightProblem((np.zeros((2, 2)), np.eye(2), np.eye(2)), lower_bound=0.1)
    w = fast_ci_weights(p).weights
    assert_feasible(w, 0.1)
    np.testing.assert_allclose(w, [0.1, 0.45, 0.45])


def test_fast_weights_within_envelope(rng):
    ratios = []
    for _ in range(20):
        p = random_problem(rng, int(rng.integers(2, 5)))
        fast = fast_ci_weights(p)
        opt = optimize_ci_weights(p)
        assert_feasible(fast.weights, p.lower_bound)
        assert fast.objective >= opt.objective * (1 - 1e-9)
        ratios.append(fast.objective / opt.objective)
    assert max(ratios) < 2.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=8))
def test_project_simplex(v):
    v = np.array(v)
    p = project_simplex(v)
    assert abs(p.sum() - 1) < 1e-12 and np.all(p >= 0)
    # optimality: (v - p) . (q - p) <= 0 for vertices q
    for q in np.eye(len(v)):
        assert (v - p) @ (q - p) <= 1e-9
