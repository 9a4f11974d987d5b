import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from ccwlan.errors import InfeasibleObjectiveError, OracleScaleExceededError, UndefinedUtilityError
from ccwlan.fairness import (
    PROPORTIONAL,
    ExplicitVertices,
    FairnessObjective,
    brute_force_fairness,
    maximize_fairness,
    utility,
)

MAXMIN = FairnessObjective(math.inf)
R = 1 / 3


def rate_matrix(seed, n_vec=None, K=None):
    rng = np.random.default_rng(seed)
    n_vec = n_vec or int(rng.integers(1, 5))
    K = K or int(rng.integers(1, 6))
    V = np.zeros((n_vec, K))
    for i in range(n_vec):
        mask = rng.random(K) < 0.6
        V[i, mask] = 1.0 / rng.integers(1, 10, size=mask.sum())
    V[0, 0] = max(V[0, 0], 0.5)
    return V


def test_symmetric_pair():
    p = maximize_fairness([[1, 0], [0, 1]])
    assert np.allclose(p.throughput, [0.5, 0.5], atol=1e-6)
    assert p.utility == pytest.approx(-2 * math.log(2), abs=1e-6)
    assert sorted(p.weights.values()) == pytest.approx([0.5, 0.5], abs=1e-5)


def test_single_vector():
    p = maximize_fairness([[R, R, 0.0]])
    assert p.weights == {0: 1.0}
    assert p.throughput.tolist() == [R, R, 0.0]
    assert p.excluded_users == (2,)


def test_two_vector_grid_example():
    V = [[1 / 3, 1 / 3, 0], [0, 1 / 3, 1 / 3]]
    got = maximize_fairness(V)
    ref = brute_force_fairness(V, 1e-3)
    assert abs(got.utility - ref.utility) <= 1e-4


def test_utility_values():
    assert utility([1 / 3, 1 / 3]) == pytest.approx(-2 * math.log(3))
    assert utility([1 / 3] * 3, FairnessObjective(0)) == pytest.approx(1.0)
    assert utility([0.5, 0.25], FairnessObjective(2)) == pytest.approx(-6.0)
    assert utility([0.5, 0.25], MAXMIN) == 0.25
    with pytest.raises(UndefinedUtilityError):
        utility([0.0, 1.0])
    assert utility([0.0, 1.0], FairnessObjective(0.5)) == pytest.approx(2.0)


def test_negative_parameter_rejected():
    with pytest.raises(ValueError):
        FairnessObjective(-1)


def test_all_zero_is_infeasible():
    with pytest.raises(InfeasibleObjectiveError):
        maximize_fairness([[0.0, 0.0]])
    with pytest.raises(InfeasibleObjectiveError):
        brute_force_fairness([[0.0, 0.0]], 0.1)


def test_grid_search_limits():
    with pytest.raises(OracleScaleExceededError):
        brute_force_fairness(np.eye(5), 0.1)
    p = brute_force_fairness([[1, 0], [0, 1]], 1e-3)
    assert p.utility == pytest.approx(-2 * math.log(2), abs=1e-5)
    assert brute_force_fairness([[0.5, 0.25]], 1e-3).throughput.tolist() == [0.5, 0.25]


def exact_maxmin(V):
    """Full LP over all vectors: maximize z s.t. theta @ V >= z on served users."""
    V = np.asarray(V)
    V = V[:, V.max(axis=0) > 0]
    n, m = V.shape
    c = np.r_[np.zeros(n), -1.0]
    res = linprog(
        c, A_ub=np.hstack([-V.T, np.ones((m, 1))]), b_ub=np.zeros(m),
        A_eq=np.r_[np.ones(n), 0.0][None, :], b_eq=[1.0],
        bounds=[(0, None)] * n + [(None, None)], method="highs-ds",
    )
    return -res.fun


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.5, 1.0, 2.0]))
def test_matches_grid_search(seed, a):
    V = rate_matrix(seed, n_vec=int(np.random.default_rng(seed).integers(1, 4)))
    obj = FairnessObjective(a)
    got = maximize_fairness(V, obj)
    ref = brute_force_fairness(V, 1e-3, obj)
    # the grid optimum is feasible, so the solver may not be worse by more than its gap
    assert got.utility >= ref.utility - 1e-6
    assert abs(got.utility - ref.utility) <= 1e-4


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_maxmin_matches_exact_lp(seed):
    # a grid is too coarse here: the min is piecewise linear in the weights
    V = rate_matrix(seed)
    got = maximize_fairness(V, MAXMIN)
    assert got.utility == pytest.approx(exact_maxmin(V), abs=1e-9)
    if len(V) <= 3:
        assert got.utility >= brute_force_fairness(V, 1e-3, MAXMIN).utility - 1e-9


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 1.0, 2.0, math.inf]))
def test_point_invariants(seed, a):
    V = rate_matrix(seed)
    p = maximize_fairness(V, FairnessObjective(a))
    w = np.array([p.weights.get(i, 0.0) for i in range(len(V))])
    assert np.all(w >= 0)
    assert abs(w.sum() - 1) <= 1e-9
    assert np.allclose(w @ V, p.throughput, rtol=0, atol=1e-9)
    if not math.isinf(a):
        assert p.gap <= 1e-6 and not p.cap_hit
        assert all(b >= a_ - 1e-12 for a_, b in zip(p.history, p.history[1:]))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dominated_vector_does_not_change_optimum(seed):
    V = rate_matrix(seed)
    extra = V[0] * 0.5
    a = maximize_fairness(V).utility
    b = maximize_fairness(np.vstack([V, extra])).utility
    assert b == pytest.approx(a, abs=2e-6)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.5, 2.0, 4.0]))
def test_scale_free_vertex_sequence(seed, c):
    V = rate_matrix(seed)
    a = maximize_fairness(V, max_iter=20)
    b = maximize_fairness(V * c, max_iter=20)
    assert set(a.weights) == set(b.weights)
    assert np.allclose(a.throughput * c, b.throughput, rtol=1e-9, atol=1e-12)


def test_sum_rate_is_single_vertex():
    p = maximize_fairness([[0.5, 0, 0], [1 / 3, 1 / 3, 1 / 3]], FairnessObjective(0))
    assert p.weights == {1: 1.0}
    assert p.utility == pytest.approx(1.0)


def test_maxmin_balances():
    p = maximize_fairness([[1, 0], [0, 0.5]], MAXMIN)
    assert p.utility == pytest.approx(1 / 3, abs=1e-9)
    assert np.allclose(p.throughput, [1 / 3, 1 / 3])


def test_iteration_cap_reported():
    V = np.random.default_rng(3).uniform(0.05, 1.0, size=(40, 8))
    p = maximize_fairness(V, tolerance=1e-300, max_iter=3)
    assert p.cap_hit and p.iterations == 3


def test_explicit_vertices_lmo():
    ev = ExplicitVertices([[1, 0], [0, 2]])
    assert ev.lmo(np.array([1.0, 1.0]))[0] == 1
    with pytest.raises(ValueError):
        ExplicitVertices([[-1.0]])


def test_point_json():
    p = maximize_fairness([[1, 0], [0, 1]], PROPORTIONAL)
    doc = json.loads(json.dumps(p.to_json()))
    assert set(doc) == {"weights", "throughput", "utility", "excluded_users", "diagnostics"}
    assert {"iterations", "gap", "cap_hit"} <= set(doc["diagnostics"])
