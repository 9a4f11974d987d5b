"""Policy enumeration and rate vectors.

A policy fixes an activation pattern, a nulling plan (interference
reduction only) and one feasible set per serving helper. For a given
pattern and plan the feasible-set choices of different helpers are
independent, so the policies form a Cartesian product; that product is kept
as a :class:`PolicyFamily` and only expanded when explicit policies are
needed.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations, product
from math import comb, prod
from typing import Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from . import kernels
from .delivery import (
    FeasibleSet,
    Transmission,
    absent_profiles,
    build_ccc_messages,
    build_codewords,
    nulling_options,
    transmission_count,
)
from .errors import InconsistentPolicyError, InstanceTooLargeError, InvalidParametersError
from .topology import (
    ActivationPattern,
    NetworkTopology,
    coverage_masks,
    mask_of,
    members,
)

log = logging.getLogger(__name__)

MODES = ("siso", "ir", "ccc")


@dataclass(frozen=True)
class EnumerationLimits:
    max_exhaustive_helpers: int = 12
    max_policies: int = 500_000
    max_families: int = 500_000
    max_sampled_patterns: int = 4096
    sampling: bool = False
    seed: int = 0


@dataclass(frozen=True)
class HelperOffer:
    """What one active helper can do under a given pattern and plan.

    ``groups`` are the served-candidate users split by profile (profile
    ascending); a feasible set takes ``min(cap, len(g))`` users from each.
    """

    helper: int
    n: int
    groups: tuple[tuple[int, ...], ...]
    cap: int

    @property
    def rate(self) -> float:
        return 1.0 / self.n

    @property
    def count(self) -> int:
        return prod(comb(len(g), min(self.cap, len(g))) for g in self.groups)

    def choices(self) -> Iterator[tuple[int, ...]]:
        options = [combinations(g, min(self.cap, len(g))) for g in self.groups]
        for pick in product(*options):
            yield tuple(sorted(u for part in pick for u in part))


def _freeze_plan(plan: Mapping[int, object] | None) -> tuple[tuple[int, frozenset], ...]:
    return tuple(sorted((int(i), frozenset(z)) for i, z in (plan or {}).items() if z))


@dataclass(frozen=True)
class Policy:
    pattern: ActivationPattern
    mode: str
    nulling: tuple[tuple[int, frozenset], ...]
    choices: tuple[FeasibleSet, ...]

    @property
    def nulling_plan(self) -> dict[int, frozenset]:
        return dict(self.nulling)

    @property
    def key(self):
        return (
            self.pattern.mask,
            self.mode,
            tuple((i, tuple(sorted(z))) for i, z in self.nulling),
            tuple((fs.helper, fs.users) for fs in self.choices),
        )

    def to_json(self) -> dict:
        return {
            "pattern": [int(b) for b in self.pattern.bits],
            "mode": self.mode,
            "nulling": {str(i): sorted(z) for i, z in self.nulling},
            "feasible_sets": {str(fs.helper): list(fs.users) for fs in self.choices},
        }

    @classmethod
    def from_json(cls, doc) -> "Policy":
        mode = doc["mode"]
        fs_mode = "ccc" if mode == "ccc" else "siso"
        return cls(
            ActivationPattern.coerce(doc["pattern"]),
            mode,
            _freeze_plan({int(i): z for i, z in doc.get("nulling", {}).items()}),
            tuple(
                FeasibleSet(int(i), tuple(u), fs_mode)
                for i, u in sorted(doc["feasible_sets"].items(), key=lambda kv: int(kv[0]))
            ),
        )


@dataclass(frozen=True)
class PolicyFamily:
    pattern: ActivationPattern
    mode: str
    nulling: tuple[tuple[int, frozenset], ...]
    offers: tuple[HelperOffer, ...]

    @property
    def count(self) -> int:
        return prod(o.count for o in self.offers)

    @property
    def key(self):
        """Identifies the family's rate-vector set; the nulling plan does not enter."""
        return tuple((o.helper, o.n, o.cap, o.groups) for o in self.offers)

    def make_policy(self, picks: Sequence[tuple[int, ...]]) -> Policy:
        fs_mode = "ccc" if self.mode == "ccc" else "siso"
        return Policy(
            self.pattern,
            self.mode,
            self.nulling,
            tuple(FeasibleSet(o.helper, p, fs_mode) for o, p in zip(self.offers, picks)),
        )

    def policies(self) -> Iterator[Policy]:
        for picks in product(*(list(o.choices()) for o in self.offers)):
            yield self.make_policy(picks)

    def rate_vector(self, picks: Sequence[tuple[int, ...]], num_users: int) -> np.ndarray:
        r = np.zeros(num_users)
        for o, p in zip(self.offers, picks):
            r[list(p)] = o.rate
        return r


class FamilySet(NamedTuple):
    families: list[PolicyFamily]
    patterns: int
    raw_families: int
    sampled: bool


# --- family construction ------------------------------------------------------------


class _Context(NamedTuple):
    topology: NetworkTopology
    profile_masks: tuple[int, ...]
    L: int
    t: int
    mode: str
    mux_gain: int
    plan_budget: int | None
    seed: int


def _profile_masks(profiles: Mapping[int, int], L: int, K: int) -> tuple[int, ...]:
    masks = [0] * L
    for k in range(K):
        l = profiles[k]
        if not 1 <= l <= L:
            raise InvalidParametersError(f"user {k} has profile {l} outside 1..{L}")
        masks[l - 1] |= 1 << k
    return tuple(masks)


def _candidate_masks(topology: NetworkTopology, active: Sequence[int]) -> dict[int, int]:
    out = {}
    for i in active:
        others = 0
        for j in active:
            if j != i:
                others |= topology.trans_masks[j]
        out[i] = topology.inter_masks[i] & others
    return out


def _plan_options(ctx: _Context, active: Sequence[int]) -> list[list[frozenset]]:
    cands = _candidate_masks(ctx.topology, active)
    return [nulling_options(members(cands[i]), ctx.mux_gain) for i in active]


def _pattern_plans(ctx: _Context, mask: int):
    active = members(mask)
    plans = [{}]
    sampled = False
    if ctx.mode != "ir" or ctx.mux_gain < 2:
        return active, plans, sampled
    options = _plan_options(ctx, active)
    total = prod(len(o) for o in options) - 1
    if ctx.plan_budget is None or total <= ctx.plan_budget:
        for pick in product(*options):
            if any(pick):
                plans.append(dict(zip(active, pick)))
        return active, plans, sampled
    sampled = True
    rng = np.random.default_rng([ctx.seed, mask])
    seen = set()
    attempts = 0
    while len(seen) < ctx.plan_budget and attempts < 8 * ctx.plan_budget:
        attempts += 1
        pick = tuple(o[rng.integers(len(o))] for o in options)
        if any(pick) and pick not in seen:
            seen.add(pick)
            plans.append(dict(zip(active, pick)))
    return active, plans, sampled


def _offers(ctx: _Context, active: Sequence[int], plan: Mapping[int, frozenset]) -> tuple[HelperOffer, ...]:
    cov = coverage_masks(ctx.topology, active, {i: mask_of(z) for i, z in plan.items()})
    cap = ctx.mux_gain if ctx.mode == "ccc" else 1
    offers = []
    for i in active:
        m = cov[i]
        if m:
            groups = tuple(members(m & pm) for pm in ctx.profile_masks if m & pm)
            offers.append(HelperOffer(i, transmission_count(ctx.L, ctx.t, ctx.L - len(groups)), groups, cap))
    return tuple(offers)


def _pattern_families(ctx: _Context, mask: int):
    active, plans, sampled = _pattern_plans(ctx, mask)
    pattern = ActivationPattern.from_mask(mask, ctx.topology.num_helpers)
    out = []
    for plan in plans:
        offers = _offers(ctx, active, plan)
        if offers:
            out.append(PolicyFamily(pattern, ctx.mode, _freeze_plan(plan), offers))
    return out, sampled


def _pattern_masks(H: int, limits: EnumerationLimits) -> tuple[list[int], bool]:
    if H <= limits.max_exhaustive_helpers:
        return list(range(1, 1 << H)), False
    if not limits.sampling:
        raise InstanceTooLargeError(
            f"H={H} exceeds max_exhaustive_helpers={limits.max_exhaustive_helpers} and sampling is off"
        )
    rng = np.random.default_rng([limits.seed, H])
    chosen = {1 << i for i in range(H)}  # single-helper patterns keep every user servable
    while len(chosen) < min(limits.max_sampled_patterns, (1 << H) - 1):
        bits = rng.integers(0, 2, size=H)
        m = int(sum(int(b) << i for i, b in enumerate(bits)))
        if m:
            chosen.add(m)
    return sorted(chosen), True


def build_policy_families(
    topology: NetworkTopology,
    profiles: Mapping[int, int],
    L: int,
    t: int,
    mode: str,
    mux_gain: int = 1,
    limits: EnumerationLimits | None = None,
    dedupe: bool = True,
    workers: int = 1,
) -> FamilySet:
    """All policy families of one mode, in activation-pattern order.

    Interference reduction always includes the empty plan, so its policy set
    contains the single-antenna one. With ``dedupe`` families with identical
    offers (hence identical rate vectors) are collapsed to the first one.
    """
    if mode not in MODES:
        raise InvalidParametersError(f"unknown mode {mode!r}")
    if mux_gain < 1:
        raise InvalidParametersError("mux_gain must be at least 1")
    limits = limits or EnumerationLimits()
    K, H = topology.num_users, topology.num_helpers
    masks, sampled = _pattern_masks(H, limits)
    ctx = _Context(topology, _profile_masks(profiles, L, K), L, t, mode, mux_gain, None, limits.seed)

    if mode == "ir" and mux_gain >= 2:
        total = 0
        for m in masks:
            total += prod(len(o) for o in _plan_options(ctx, members(m)))
        if total > limits.max_families:
            if not limits.sampling:
                raise InstanceTooLargeError(f"{total} nulling plans exceed max_families={limits.max_families}")
            ctx = ctx._replace(plan_budget=max(1, limits.max_families // len(masks)))

    if workers > 1 and len(masks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_pattern_families, [ctx] * len(masks), masks, chunksize=8))
    else:
        results = [_pattern_families(ctx, m) for m in masks]

    families: list[PolicyFamily] = []
    raw = 0
    seen = set()
    for fams, s in results:
        sampled |= s
        raw += len(fams)
        for fam in fams:
            if dedupe:
                key = fam.key
                if key in seen:
                    continue
                seen.add(key)
            families.append(fam)
    if sampled:
        log.info("policy enumeration sampled (mode=%s, H=%d)", mode, H)
    return FamilySet(families, len(masks), raw, sampled)


# --- explicit policies ----------------------------------------------------------------


def enumerate_policies(
    topology: NetworkTopology,
    profiles: Mapping[int, int],
    L: int,
    t: int,
    mode: str,
    mux_gain: int = 1,
    limits: EnumerationLimits | None = None,
    workers: int = 1,
) -> list[tuple[Policy, np.ndarray]]:
    """Every policy of one mode with its rate vector.

    Above ``limits.max_policies`` a seeded uniform sample is returned when
    sampling is enabled; otherwise :class:`InstanceTooLargeError` is raised.
    """
    limits = limits or EnumerationLimits()
    fset = build_policy_families(topology, profiles, L, t, mode, mux_gain, limits, dedupe=False, workers=workers)
    K = topology.num_users
    counts = [f.count for f in fset.families]
    total = sum(counts)
    out = []
    if total <= limits.max_policies:
        for fam in fset.families:
            for picks in product(*(list(o.choices()) for o in fam.offers)):
                out.append((fam.make_policy(picks), fam.rate_vector(picks, K)))
        return out
    if not limits.sampling:
        raise InstanceTooLargeError(f"{total} policies exceed max_policies={limits.max_policies}")
    rng = np.random.default_rng([limits.seed, 1])
    p = np.asarray(counts, dtype=float) / total
    seen = set()
    attempts = 0
    while len(out) < limits.max_policies and attempts < 4 * limits.max_policies:
        attempts += 1
        fam = fset.families[int(rng.choice(len(p), p=p))]
        picks = []
        for o in fam.offers:
            pick = []
            for g in o.groups:
                c = min(o.cap, len(g))
                pick.extend(np.sort(rng.choice(g, size=c, replace=False)).tolist())
            picks.append(tuple(sorted(pick)))
        pol = fam.make_policy(picks)
        if pol.key in seen:
            continue
        seen.add(pol.key)
        out.append((pol, fam.rate_vector(picks, K)))
    out.sort(key=lambda pr: pr[0].key)
    return out


def policy_rate_vector(policy: Policy, profiles: Mapping[int, int], L: int, t: int, num_users: int) -> np.ndarray:
    """Rate ``1/n`` for every user of every chosen feasible set, zero elsewhere."""
    r = np.zeros(num_users)
    seen: set[int] = set()
    active = set(policy.pattern.active)
    for fs in policy.choices:
        if fs.helper not in active:
            raise InconsistentPolicyError(f"feasible set for inactive helper h{fs.helper + 1}")
        clash = seen.intersection(fs.users)
        if clash:
            raise InconsistentPolicyError(f"users {sorted(clash)} appear in two feasible sets")
        seen.update(fs.users)
        if fs.users:
            r[list(fs.users)] = 1.0 / transmission_count(L, t, absent_profiles(fs.users, profiles, L))
    return r


def policy_schedule(
    policy: Policy,
    profiles: Mapping[int, int],
    requests: Mapping[int, int],
    L: int,
    t: int,
    mux_gain: int = 1,
) -> list[Transmission]:
    """Transmissions of every active helper, helper by helper."""
    plan = policy.nulling_plan
    out: list[Transmission] = []
    for fs in policy.choices:
        if policy.mode == "ccc":
            out.extend(build_ccc_messages(fs.users, profiles, requests, L, t, mux_gain, helper=fs.helper))
        else:
            out.extend(
                build_codewords(fs.users, profiles, requests, L, t, helper=fs.helper, helper_nulling=plan.get(fs.helper, ()))
            )
    return out


# --- pruning --------------------------------------------------------------------------


def prune_rate_vectors(vectors, return_index: bool = False):
    """Drop vectors dominated componentwise by another one; duplicates collapse."""
    V = np.asarray(vectors, dtype=np.float64)
    if V.ndim != 2:
        V = V.reshape(len(V), -1)
    idx = np.flatnonzero(kernels.pareto_mask(V))
    return (V[idx], idx) if return_index else V[idx]


def effective_nulling_plans(
    topology: NetworkTopology,
    profiles: Mapping[int, int],
    pattern,
    L: int,
    t: int,
    mux_gain: int,
) -> list[tuple[dict[int, frozenset], bool]]:
    """Nulling plans of one pattern, each flagged effective or not.

    A plan is effective when at least one of its rate vectors is not weakly
    dominated by a vector reachable with one of its strict sub-plans
    (including the empty plan).
    """
    pattern = ActivationPattern.coerce(pattern, topology.num_helpers)
    K = topology.num_users
    ctx = _Context(topology, _profile_masks(profiles, L, K), L, t, "ir", mux_gain, None, 0)
    active, plans, _ = _pattern_plans(ctx, pattern.mask)

    def vectors(plan):
        offers = _offers(ctx, active, plan)
        if not offers:
            return np.zeros((1, K))
        fam = PolicyFamily(pattern, "ir", _freeze_plan(plan), offers)
        return np.array([fam.rate_vector(p, K) for p in product(*(list(o.choices()) for o in offers))])

    table = [(plan, vectors(plan)) for plan in plans]
    out = []
    for plan, V in table[1:]:
        subs = [
            W
            for other, W in table
            if other is not plan and all(other.get(i, frozenset()) <= plan.get(i, frozenset()) for i in active)
        ]
        base = np.concatenate(subs)
        effective = any(not np.any(np.all(base >= v, axis=1)) for v in V)
        out.append((plan, effective))
    return out


# --- implicit vertex set for the fairness solver -----------------------------------------


class FamilyVertices:
    """All rate vectors of a list of families, searched without expansion.

    ``lmo(grad)`` returns the vertex maximizing ``grad . r``; within a family
    each profile group independently contributes its ``cap`` best users.
    """

    def __init__(self, families: Sequence[PolicyFamily], num_users: int):
        self.families = list(families)
        self.num_users = num_users
        fam_ptr = [0]
        grp_ptr = [0]
        rates, caps, users = [], [], []
        for fam in self.families:
            for o in fam.offers:
                for g in o.groups:
                    users.extend(g)
                    grp_ptr.append(len(users))
                    rates.append(o.rate)
                    caps.append(o.cap)
            fam_ptr.append(len(rates))
        self._fam_ptr = np.asarray(fam_ptr, dtype=np.int64)
        self._grp_ptr = np.asarray(grp_ptr, dtype=np.int64)
        self._rates = np.asarray(rates, dtype=np.float64)
        self._caps = np.asarray(caps, dtype=np.int32)
        self._users = np.asarray(users, dtype=np.int32)

    def __len__(self) -> int:
        return len(self.families)

    def scores(self, grad) -> np.ndarray:
        return kernels.family_scores(grad, self._fam_ptr, self._grp_ptr, self._rates, self._caps, self._users)

    def lmo(self, grad):
        grad = np.asarray(grad, dtype=float)
        f = int(np.argmax(self.scores(grad)))
        fam = self.families[f]
        picks = []
        for o in fam.offers:
            chosen = []
            for g in o.groups:
                chosen.extend(sorted(g, key=lambda u: (-grad[u], u))[: min(o.cap, len(g))])
            picks.append(tuple(sorted(chosen)))
        key = (f, tuple(picks))
        return key, fam.rate_vector(picks, self.num_users)

    def policy(self, key) -> Policy:
        f, picks = key
        return self.families[f].make_policy(picks)

    def vector(self, key) -> np.ndarray:
        f, picks = key
        return self.families[f].rate_vector(picks, self.num_users)
