"""Per-helper transmission schedules.

Two constructions are provided. XOR codewords serve one user per profile
(single antenna, or interference reduction where the whole transmission is
nulled at a few users). Superposition messages serve up to ``mux_gain`` users
per profile, with each stream nulled at its same-profile co-members.

Beamformers never appear as vectors: a stream is described only by the users
at which it is suppressed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product
from math import comb
from typing import Iterable, Mapping, Sequence

from .errors import InvalidFeasibleSetError, ScheduleSchemaError
from .placement import SubpacketIndex

XOR = "xor"
SUPERPOSITION = "superposition"

NullingPlan = Mapping[int, frozenset]


@dataclass(frozen=True)
class FeasibleSet:
    helper: int
    users: tuple[int, ...]
    mode: str = "siso"  # "siso" (also used for interference reduction) or "ccc"


@dataclass(frozen=True)
class Term:
    subpacket: SubpacketIndex
    user: int
    nulled: frozenset = frozenset()


@dataclass(frozen=True)
class Transmission:
    helper: int
    kind: str
    terms: tuple[Term, ...]
    helper_nulling: frozenset = field(default=frozenset())

    def label(self, names=None) -> str:
        sep = " + " if self.kind == SUPERPOSITION else " ^ "
        parts = []
        for term in self.terms:
            s = term.subpacket.label(names)
            if term.nulled:
                s += "*w{" + ",".join(str(u + 1) for u in sorted(term.nulled)) + "}"
            parts.append(s)
        out = sep.join(parts)
        if self.helper_nulling:
            out = "(" + out + ")*w{" + ",".join(str(u + 1) for u in sorted(self.helper_nulling)) + "}"
        return out


# --- feasible sets -------------------------------------------------------------


def profile_groups(users: Iterable[int], profiles: Mapping[int, int]) -> dict[int, tuple[int, ...]]:
    groups: dict[int, list[int]] = {}
    for u in sorted(users):
        groups.setdefault(profiles[u], []).append(u)
    return {l: tuple(g) for l, g in sorted(groups.items())}


def absent_profiles(users: Iterable[int], profiles: Mapping[int, int], L: int) -> int:
    return L - len({profiles[u] for u in users})


def feasible_sets_siso(covered: Iterable[int], profiles: Mapping[int, int], helper: int = 0) -> list[FeasibleSet]:
    """Every maximal set holding exactly one user of each profile present in ``covered``."""
    groups = profile_groups(covered, profiles)
    if not groups:
        return []
    return [FeasibleSet(helper, tuple(sorted(pick)), "siso") for pick in product(*groups.values())]


def feasible_sets_ccc(covered: Iterable[int], profiles: Mapping[int, int], mux_gain: int, helper: int = 0) -> list[FeasibleSet]:
    """Every maximal set holding ``min(mux_gain, |group|)`` users of each profile group."""
    if mux_gain < 1:
        raise InvalidFeasibleSetError("mux_gain must be at least 1")
    groups = profile_groups(covered, profiles)
    if not groups:
        return []
    options = [list(combinations(g, min(mux_gain, len(g)))) for g in groups.values()]
    out = []
    for pick in product(*options):
        out.append(FeasibleSet(helper, tuple(sorted(u for part in pick for u in part)), "ccc"))
    return out


def transmission_count(L: int, t: int, absent: int) -> int:
    """Number of transmissions until every served user holds its whole chunk."""
    # math.comb already returns 0 when absent < t + 1
    return comb(L, t + 1) - comb(absent, t + 1)


# --- schedule construction ----------------------------------------------------


def _profile_order(users: Sequence[int], profiles: Mapping[int, int], L: int):
    """Profiles present, ordered by their lowest member, followed by absent ones ascending."""
    groups = profile_groups(users, profiles)
    for l in groups:
        if not 1 <= l <= L:
            raise InvalidFeasibleSetError(f"profile {l} outside 1..{L}")
    present = sorted(groups, key=lambda l: groups[l][0])
    absent = [l for l in range(1, L + 1) if l not in groups]
    return present + absent, groups


def build_codewords(
    users: Sequence[int],
    profiles: Mapping[int, int],
    requests: Mapping[int, int],
    L: int,
    t: int,
    helper: int = 0,
    helper_nulling: Iterable[int] = (),
) -> list[Transmission]:
    """XOR codewords for a feasible set with pairwise-distinct profiles.

    Absent profiles are filled with phantom users; each (t+1)-subset of the
    extended set gives one codeword, phantom-only codewords are dropped and
    phantom terms stripped from the rest.
    """
    users = tuple(users)
    if len({profiles[u] for u in users}) != len(users):
        raise InvalidFeasibleSetError("feasible set for XOR codewords has repeated profiles")
    order, groups = _profile_order(users, profiles, L)
    nulling = frozenset(helper_nulling)
    schedule = []
    for subset in combinations(order, t + 1):
        terms = []
        for l in subset:
            if l not in groups:
                continue  # phantom
            u = groups[l][0]
            S = tuple(sorted(p for p in subset if p != l))
            terms.append(Term(SubpacketIndex(requests[u], S), u))
        if terms:
            schedule.append(Transmission(helper, XOR, tuple(terms), nulling))
    return schedule


def build_ccc_messages(
    users: Sequence[int],
    profiles: Mapping[int, int],
    requests: Mapping[int, int],
    L: int,
    t: int,
    mux_gain: int,
    helper: int = 0,
) -> list[Transmission]:
    """Superposition messages serving up to ``mux_gain`` users per profile.

    For every (t+1)-subset S of profiles, all users with a profile in S share
    one message; the stream for user u carries W_{d_u, S minus L(u)} and is
    nulled at u's same-profile co-members.
    """
    order, groups = _profile_order(tuple(users), profiles, L)
    for l, g in groups.items():
        if len(g) > mux_gain:
            raise InvalidFeasibleSetError(f"{len(g)} users of profile {l} exceed mux_gain={mux_gain}")
    schedule = []
    for subset in combinations(order, t + 1):
        terms = []
        for l in subset:
            same = groups.get(l, ())
            for u in same:
                S = tuple(sorted(p for p in subset if p != l))
                terms.append(Term(SubpacketIndex(requests[u], S), u, frozenset(same) - {u}))
        if terms:
            schedule.append(Transmission(helper, SUPERPOSITION, tuple(terms)))
    return schedule


# --- nulling plans --------------------------------------------------------------


def nulling_options(candidates: Iterable[int], mux_gain: int) -> list[frozenset]:
    """Subsets of ``candidates`` of size at most ``mux_gain - 1`` (empty set first)."""
    cand = sorted(candidates)
    return [frozenset(c) for m in range(mux_gain) for c in combinations(cand, m)]


def nulling_plan_count(candidate_sizes: Iterable[int], mux_gain: int) -> int:
    total = 1
    for n in candidate_sizes:
        total *= sum(comb(n, m) for m in range(mux_gain))
    return total - 1


def enumerate_nulling_plans(candidates: Mapping[int, Iterable[int]], mux_gain: int) -> list[dict[int, frozenset]]:
    """Every combination of per-helper nulling sets except the all-empty one."""
    helpers = sorted(candidates)
    options = [nulling_options(candidates[i], mux_gain) for i in helpers]
    plans = []
    for pick in product(*options):
        if any(pick):
            plans.append({i: z for i, z in zip(helpers, pick)})
    return plans


# --- JSON ------------------------------------------------------------------------


def schedule_to_json(schedule: Iterable[Transmission]) -> dict:
    slots: dict[int, int] = {}
    rows = []
    for tx in schedule:
        slot = slots.get(tx.helper, 0)
        slots[tx.helper] = slot + 1
        rows.append(
            {
                "helper": tx.helper,
                "slot": slot,
                "kind": tx.kind,
                "helper_nulling": sorted(tx.helper_nulling),
                "terms": [
                    {
                        "chunk": term.subpacket.chunk,
                        "profiles": list(term.subpacket.profiles),
                        "user": term.user,
                        "nulled": sorted(term.nulled),
                    }
                    for term in tx.terms
                ],
            }
        )
    return {"transmissions": rows}


def schedule_from_json(doc) -> dict[int, list[Transmission]]:
    """Parse a schedule document into per-helper slot lists."""
    try:
        rows = doc["transmissions"]
        per_helper: dict[int, dict[int, Transmission]] = {}
        for row in rows:
            kind = row["kind"]
            if kind not in (XOR, SUPERPOSITION):
                raise ScheduleSchemaError(f"unknown transmission kind {kind!r}")
            terms = tuple(
                Term(
                    SubpacketIndex(int(t["chunk"]), tuple(int(p) for p in t["profiles"])),
                    int(t["user"]),
                    frozenset(int(u) for u in t.get("nulled", ())),
                )
                for t in row["terms"]
            )
            helper, slot = int(row["helper"]), int(row["slot"])
            slots = per_helper.setdefault(helper, {})
            if slot in slots:
                raise ScheduleSchemaError(f"helper {helper} has two transmissions in slot {slot}")
            slots[slot] = Transmission(helper, kind, terms, frozenset(int(u) for u in row.get("helper_nulling", ())))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ScheduleSchemaError):
            raise
        raise ScheduleSchemaError(f"malformed schedule: {exc!r}") from None
    out = {}
    for helper, slots in per_helper.items():
        if sorted(slots) != list(range(len(slots))):
            raise ScheduleSchemaError(f"helper {helper} slots are not contiguous from 0")
        out[helper] = [slots[s] for s in range(len(slots))]
    return out
