import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import grid_pair_objective, waterfill_prefix
from twowayrelay.errors import ContractViolation
from twowayrelay.power import ScalarProblem, check_convexity_condition, kkt_residual, solve_pair, waterfill_inner


def test_waterfill_symmetric():
    np.testing.assert_allclose(waterfill_inner([1.0, 1.0], [1.0, 1.0], 2.0), [1.0, 1.0], atol=1e-12)


def test_waterfill_hand_kkt():
    # sqrt(mu) = 6/11 solves both stationarity conditions with the budget binding
    np.testing.assert_allclose(waterfill_inner([4.0, 1.0], [1.0, 1.0], 1.5), [2 / 3, 5 / 6], atol=1e-12)


def test_waterfill_inactive_entry():
    x = waterfill_inner([100.0, 1e-4], [1.0, 1.0], 0.01)
    assert x[1] == 0.0
    assert x.sum() == pytest.approx(0.01, rel=1e-10)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(1e-3, 1e3), min_size=1, max_size=6), st.floats(1e-3, 1e3))
def test_waterfill_matches_active_set_enumeration(a, budget):
    x = waterfill_inner(a, np.ones(len(a)), budget)
    assert abs(x.sum() - budget) <= 1e-10 * budget
    assert np.all(x >= 0)
    np.testing.assert_allclose(x, waterfill_prefix(a, budget), atol=1e-9 * budget)


@pytest.mark.parametrize("args", [([1.0], [1.0], 0.0), ([-1.0], [1.0], 1.0), ([np.inf], [1.0], 1.0)])
def test_waterfill_rejects(args):
    with pytest.raises(ContractViolation):
        waterfill_inner(*args)


def test_pair_symmetric():
    a = solve_pair(ScalarProblem([1.0, 1.0], 2.0, 2.0))
    np.testing.assert_allclose(a.z, [1, 1], atol=1e-9)
    np.testing.assert_allclose(a.w, [1, 1], atol=1e-9)
    assert a.objective == pytest.approx(1.0)


def test_pair_single_stream():
    a = solve_pair(ScalarProblem([10.0], 1.0, 2.0))
    assert (a.z[0], a.w[0]) == pytest.approx((1.0, 2.0))
    assert a.objective == pytest.approx(1 / 21)


def test_pair_matches_grid():
    c = np.array([1.0, 4.0])
    a = solve_pair(ScalarProblem(c, 2.0, 1.0))
    ref, _ = grid_pair_objective(c, 2.0, 1.0)
    assert a.objective <= ref + 1e-4
    assert a.objective >= ref - 1e-4


def test_pair_monotone_and_budgets(rng):
    for _ in range(50):
        n = rng.integers(1, 5)
        prob = ScalarProblem(np.sort(rng.exponential(5.0, n)) + 1e-3, rng.uniform(0.1, 10), rng.uniform(0.1, 10))
        a = solve_pair(prob)
        assert a.converged
        assert np.all(np.diff(a.history) <= 1e-15)
        assert np.all(a.z > 0) and np.all(a.w > 0)
        assert a.z.sum() == pytest.approx(prob.p_t, rel=1e-9)
        assert a.w.sum() == pytest.approx(prob.p_r, rel=1e-9)


def test_kkt_certificate_when_convex(rng):
    checked = 0
    for _ in range(100):
        prob = ScalarProblem(rng.uniform(5, 50, 3), rng.uniform(1, 10), rng.uniform(1, 10))
        a = solve_pair(prob)
        if np.all(check_convexity_condition(a.z, a.w, prob.gains)):
            checked += 1
            assert kkt_residual(prob, a) < 1e-8
    assert checked > 50


def test_pair_not_converged_flag():
    a = solve_pair(ScalarProblem([0.1, 30.0, 2.0], 1.0, 3.0), max_iter=1)
    assert not a.converged
    assert a.iterations == 1


def test_convexity_boundary():
    assert check_convexity_condition([1.0], [1.0], [1 / 3])[0]
    assert check_convexity_condition([1.0], [1.0], [1.0])[0]
    assert not check_convexity_condition([1.0], [1.0], [0.3])[0]


def test_pairs_decouple():
    # pair 1 reads only its own budgets: changing the other terminal's does nothing
    p = ScalarProblem([2.0, 7.0], 3.0, 4.0)
    np.testing.assert_array_equal(solve_pair(p).z, solve_pair(ScalarProblem([2.0, 7.0], 3.0, 4.0)).z)


@pytest.mark.parametrize("kw", [dict(gains=[]), dict(gains=[0.0, 1.0]), dict(gains=[1.0], p_t=-1.0)])
def test_problem_rejects(kw):
    args = dict(gains=[1.0], p_t=1.0, p_r=1.0) | kw
    with pytest.raises(ContractViolation):
        ScalarProblem(**args)
