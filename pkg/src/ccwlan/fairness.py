"""Fair time-sharing over a set of rate vectors.

The feasible throughputs are the convex combinations of the given vectors.
:func:`maximize_fairness` maximizes an alpha-fair utility over them and
returns the time-share weights. Vertex sets are accessed only through a
linear maximization oracle, so huge implicit sets (see
``policy.FamilyVertices``) work the same way as explicit matrices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable

import numpy as np
from scipy.optimize import linprog

from .errors import InfeasibleObjectiveError, OracleScaleExceededError, UndefinedUtilityError


@dataclass(frozen=True)
class FairnessObjective:
    """Alpha-fairness family: 0 sum-rate, 1 proportional fairness, inf max-min."""

    parameter: float = 1.0

    def __post_init__(self):
        if not self.parameter >= 0:
            raise ValueError("fairness parameter must be nonnegative")


PROPORTIONAL = FairnessObjective(1.0)


@dataclass
class ThroughputPoint:
    weights: dict[Hashable, float]
    throughput: np.ndarray
    utility: float
    iterations: int = 0
    gap: float = 0.0
    cap_hit: bool = False
    excluded_users: tuple[int, ...] = ()
    history: list[float] = field(default_factory=list, repr=False)

    def to_json(self, key=str) -> dict:
        return {
            "weights": [
                {"policy": key(k), "weight": float(w)}
                for k, w in sorted(self.weights.items(), key=lambda kw: -kw[1])
                if w > 1e-9
            ],
            "throughput": [float(x) for x in self.throughput],
            "utility": float(self.utility),
            "excluded_users": list(self.excluded_users),
            "diagnostics": {"iterations": self.iterations, "gap": float(self.gap), "cap_hit": self.cap_hit},
        }


class ExplicitVertices:
    """A finite matrix of rate vectors, one per row; keys are row indices."""

    def __init__(self, vectors):
        V = np.asarray(vectors, dtype=np.float64)
        if V.ndim == 1:
            V = V[None, :]
        if len(V) == 0:
            raise InfeasibleObjectiveError("no rate vectors")
        if np.any(V < 0):
            raise ValueError("rates must be nonnegative")
        self.V = V
        self.num_users = V.shape[1]

    def __len__(self) -> int:
        return len(self.V)

    def lmo(self, grad):
        i = int(np.argmax(self.V @ grad))
        return i, self.V[i]


def _as_vertices(vertices):
    return vertices if hasattr(vertices, "lmo") else ExplicitVertices(vertices)


def utility(throughput, objective: FairnessObjective = PROPORTIONAL, users=None) -> float:
    """Alpha-fair utility of ``throughput`` restricted to ``users`` (all by default)."""
    r = np.asarray(throughput, dtype=float)
    if users is not None:
        r = r[list(users)]
    a = objective.parameter
    if math.isinf(a):
        return float(r.min()) if len(r) else 0.0
    if a == 0:
        return float(r.sum())
    if np.any(r <= 0):
        if a >= 1:
            raise UndefinedUtilityError("zero rate with fairness parameter >= 1")
    if a == 1:
        return float(np.log(r).sum())
    return float((r ** (1 - a)).sum() / (1 - a))


def _gradient(r, counted, a):
    g = np.zeros_like(r)
    if a == 1:
        g[counted] = 1.0 / r[counted]
    else:
        g[counted] = r[counted] ** (-a)
    return g


def _line_search(r, d, counted, a, gmax, iters=80):
    """Largest maximizer of the concave map gamma -> f(r + gamma d) on [0, gmax]."""
    rc, dc = r[counted], d[counted]

    def slope(gam):
        x = rc + gam * dc
        if np.any(x <= 0):
            return -np.inf
        return float(np.dot(x ** (-a) if a != 1 else 1.0 / x, dc))

    if slope(gmax) >= 0:
        return gmax
    lo, hi = 0.0, gmax
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if slope(mid) >= 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * max(1.0, gmax):
            break
    return lo


def _initial_vertices(oracle, K):
    """One vertex per servable user; users no vertex serves are excluded."""
    keys, vecs = [], []
    covered = np.zeros(K, dtype=bool)
    excluded = []
    for k in range(K):
        if covered[k]:
            continue
        e = np.zeros(K)
        e[k] = 1.0
        key, v = oracle.lmo(e)
        v = np.array(v, dtype=float)
        if v[k] > 0:
            if key not in keys:
                keys.append(key)
                vecs.append(v)
            covered |= v > 0
        else:
            excluded.append(k)
    return keys, vecs, tuple(excluded)


def maximize_fairness(
    vertices,
    objective: FairnessObjective = PROPORTIONAL,
    tolerance: float = 1e-6,
    max_iter: int = 100_000,
) -> ThroughputPoint:
    """Maximize the utility of a convex combination of rate vectors.

    Finite parameters use pairwise Frank-Wolfe with exact line search and stop
    once the duality gap ``grad . (s - r)`` is at most ``tolerance``. Users
    with zero rate in every vector are left out of the objective and listed
    in ``excluded_users``. Max-min fairness is solved as a linear program with
    column generation.
    """
    oracle = _as_vertices(vertices)
    K = oracle.num_users
    keys, vecs, excluded = _initial_vertices(oracle, K)
    if not keys:
        raise InfeasibleObjectiveError("every rate vector is zero")
    counted = np.array([k for k in range(K) if k not in set(excluded)], dtype=int)
    a = objective.parameter
    if math.isinf(a):
        return _max_min(oracle, keys, vecs, counted, excluded, tolerance, max_iter)
    if a == 0:
        g = np.zeros(K)
        g[counted] = 1.0
        key, v = oracle.lmo(g)
        v = np.array(v, dtype=float)
        u = utility(v, objective, counted)
        return ThroughputPoint({key: 1.0}, v, u, 1, 0.0, False, excluded, [u])

    weights = {k: 1.0 / len(keys) for k in keys}
    store = dict(zip(keys, vecs))
    r = sum(weights[k] * store[k] for k in keys)
    history = [utility(r, objective, counted)]
    gap = np.inf
    it = 0
    cap_hit = False
    while True:
        g = _gradient(r, counted, a)
        s_key, s = oracle.lmo(g)
        s = np.array(s, dtype=float)
        gap = float(g @ (s - r))
        if gap <= tolerance:
            break
        if it >= max_iter:
            cap_hit = True
            break
        it += 1
        store.setdefault(s_key, s)
        active = list(weights)
        a_key = min(active, key=lambda k: (float(g @ store[k]), active.index(k)))
        d = s - store[a_key]
        gam = _line_search(r, d, counted, a, weights[a_key])
        if gam <= 0:
            # pairwise direction stalled; take a plain Frank-Wolfe step instead
            d = s - r
            gam = _line_search(r, d, counted, a, 1.0)
            if gam <= 0:
                break
            for k in weights:
                weights[k] *= 1.0 - gam
            weights[s_key] = weights.get(s_key, 0.0) + gam
        else:
            weights[s_key] = weights.get(s_key, 0.0) + gam
            weights[a_key] -= gam
            if weights[a_key] <= 1e-15:
                del weights[a_key]
        total = sum(weights.values())
        weights = {k: w / total for k, w in weights.items() if w > 0}
        r = np.zeros(K)
        for k, w in weights.items():
            r += w * store[k]
        history.append(utility(r, objective, counted))
    return ThroughputPoint(dict(weights), r, utility(r, objective, counted), it, max(gap, 0.0), cap_hit, excluded, history)


def _max_min(oracle, keys, vecs, counted, excluded, tolerance, max_iter):
    keys, vecs = list(keys), list(vecs)
    it = 0
    while True:
        it += 1
        V = np.array(vecs)[:, counted]  # (n, m)
        n, m = V.shape
        # variables: theta (n), z; maximize z  <=>  minimize -z
        c = np.zeros(n + 1)
        c[-1] = -1.0
        A_ub = np.hstack([-V.T, np.ones((m, 1))])
        A_eq = np.zeros((1, n + 1))
        A_eq[0, :n] = 1.0
        res = linprog(c, A_ub=A_ub, b_ub=np.zeros(m), A_eq=A_eq, b_eq=[1.0],
                      bounds=[(0, None)] * n + [(None, None)], method="highs")
        theta, z = res.x[:n], res.x[-1]
        y = -np.asarray(res.ineqlin.marginals)
        g = np.zeros(oracle.num_users)
        g[counted] = y
        key, v = oracle.lmo(g)
        gap = float(g @ v) - z
        if gap <= tolerance or key in keys or it >= max_iter:
            break
        keys.append(key)
        vecs.append(np.array(v, dtype=float))
    weights = {k: float(w) for k, w in zip(keys, theta) if w > 0}
    r = sum(w * vecs[keys.index(k)] for k, w in weights.items())
    return ThroughputPoint(weights, r, float(np.min(r[counted])), it, max(gap, 0.0), it >= max_iter, excluded)


def brute_force_fairness(vectors, grid_step: float, objective: FairnessObjective = PROPORTIONAL) -> ThroughputPoint:
    """Grid search over time-share weights in steps of ``grid_step`` (at most 4 vectors)."""
    V = np.asarray(vectors, dtype=float)
    if V.ndim == 1:
        V = V[None, :]
    n_vec = len(V)
    if n_vec > 4:
        raise OracleScaleExceededError("grid search supports at most 4 vectors")
    if n_vec == 0:
        raise InfeasibleObjectiveError("no rate vectors")
    counted = np.flatnonzero(V.max(axis=0) > 0)
    if len(counted) == 0:
        raise InfeasibleObjectiveError("every rate vector is zero")
    steps = int(round(1.0 / grid_step))
    Vc = V[:, counted]
    a = objective.parameter

    def evaluate(theta):
        R = theta @ Vc
        with np.errstate(divide="ignore", invalid="ignore"):
            if math.isinf(a):
                u = R.min(axis=1)
            elif a == 0:
                u = R.sum(axis=1)
            elif a == 1:
                u = np.log(R).sum(axis=1)
            else:
                u = (R ** (1 - a)).sum(axis=1) / (1 - a)
        if a >= 1 and not math.isinf(a):
            u = np.where(np.all(R > 0, axis=1), u, -np.inf)
        return u

    best_u, best_theta = -np.inf, None
    idx = np.arange(steps + 1)
    if n_vec == 1:
        grids = [np.ones((1, 1))]
    elif n_vec == 2:
        grids = [np.stack([idx, steps - idx], axis=1) / steps]
    else:
        grids = []
        outer = idx if n_vec == 4 else [None]
        for i0 in outer:
            rest = steps - (i0 or 0)
            i, j = np.meshgrid(np.arange(rest + 1), np.arange(rest + 1), indexing="ij")
            ok = i + j <= rest
            i, j = i[ok], j[ok]
            cols = [i, j, rest - i - j]
            if n_vec == 4:
                cols = [np.full_like(i, i0)] + cols
            grids.append(np.stack(cols, axis=1) / steps)
    for theta in grids:
        u = evaluate(theta)
        b = int(np.argmax(u))
        if u[b] > best_u:
            best_u, best_theta = float(u[b]), theta[b]
    if best_theta is None:
        raise InfeasibleObjectiveError("no grid point has finite utility")
    r = best_theta @ V
    excluded = tuple(int(k) for k in np.flatnonzero(V.max(axis=0) <= 0))
    return ThroughputPoint({i: float(w) for i, w in enumerate(best_theta) if w > 0}, r, best_u, excluded_users=excluded)
