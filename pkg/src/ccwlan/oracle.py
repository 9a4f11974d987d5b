"""Brute-force reception check for delivery schedules.

Everything here works from the schedule's JSON form, the reachability
relations and the cache placement. Nothing is taken from the schedule
builders' own bookkeeping. Slot ``s`` of every active helper goes out at
the same time; a helper with a shorter schedule is silent afterwards.

A user decodes a slot when exactly one helper's signal reaches it after
nulling, it is inside that helper's transmission range, and all but one
surviving term is already in its cache; the remaining term is recovered.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Mapping

from .delivery import SUPERPOSITION, Term, Transmission, schedule_from_json, schedule_to_json
from .errors import ScheduleSchemaError
from .placement import SubpacketIndex, subpacket_indices
from .topology import ActivationPattern, NetworkTopology


@dataclass(frozen=True)
class Observation:
    user: int
    slot: int
    received: tuple[tuple[Term, int], ...]
    nulled: tuple[tuple[Term, int], ...]
    collided: bool
    out_of_range: bool

    @property
    def origins(self) -> frozenset:
        return frozenset(h for _, h in self.received)


@dataclass
class UserLedger:
    user: int
    served: bool
    claimed_rate: float = 0.0
    achieved_rate: float = 0.0
    received: int = 0
    cancelled_by_cache: int = 0
    cancelled_by_nulling: int = 0
    collisions: int = 0
    recovered: list[SubpacketIndex] = field(default_factory=list)
    verdict: str = "pass"

    def to_json(self) -> dict:
        return {
            "user": self.user,
            "served": self.served,
            "claimed_rate": self.claimed_rate,
            "achieved_rate": self.achieved_rate,
            "received": self.received,
            "cancelled_by_cache": self.cancelled_by_cache,
            "cancelled_by_nulling": self.cancelled_by_nulling,
            "collisions": self.collisions,
            "recovered": [[s.chunk, list(s.profiles)] for s in self.recovered],
            "verdict": self.verdict,
        }


@dataclass
class VerificationReport:
    passed: bool
    users: dict[int, UserLedger]
    failures: list[str]

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "failures": list(self.failures),
            "users": [self.users[k].to_json() for k in sorted(self.users)],
        }


def _per_helper(schedule) -> dict[int, list[Transmission]]:
    if isinstance(schedule, Mapping) and "transmissions" in schedule:
        return schedule_from_json(schedule)
    # round-trip through the wire format so only its content is trusted
    return schedule_from_json(schedule_to_json(schedule))


def simulate_reception(
    schedule,
    topology: NetworkTopology,
    pattern,
    nulling: Mapping[int, object] | None = None,
) -> dict[int, list[Observation]]:
    """Per user, what arrives in every slot under the collision/nulling model."""
    pattern = ActivationPattern.coerce(pattern, topology.num_helpers)
    per_helper = _per_helper(schedule)
    for h in per_helper:
        if not (0 <= h < topology.num_helpers and pattern.bits[h]):
            raise ScheduleSchemaError(f"transmission from inactive helper {h}")
    extra = {int(h): frozenset(z) for h, z in (nulling or {}).items()}
    n_slots = max((len(s) for s in per_helper.values()), default=0)
    out: dict[int, list[Observation]] = {}
    for k in range(topology.num_users):
        obs = []
        for slot in range(n_slots):
            received, dropped = [], []
            for h, txs in sorted(per_helper.items()):
                if slot >= len(txs) or not topology.in_inter[h, k]:
                    continue
                tx = txs[slot]
                hn = tx.helper_nulling | extra.get(h, frozenset())
                for term in tx.terms:
                    if k in hn or k in term.nulled:
                        dropped.append((term, h))
                    else:
                        received.append((term, h))
            origins = {h for _, h in received}
            collided = len(origins) > 1
            out_of_range = len(origins) == 1 and not topology.in_trans[next(iter(origins)), k]
            obs.append(Observation(k, slot, tuple(received), tuple(dropped), collided, out_of_range))
        out[k] = obs
    return out


def verify_schedule(
    schedule,
    topology: NetworkTopology,
    pattern,
    nulling,
    profiles: Mapping[int, int],
    L: int,
    t: int,
    requests: Mapping[int, int],
    claimed_served: Mapping[int, float],
) -> VerificationReport:
    """Check that every claimed user recovers its whole chunk at the claimed rate.

    ``claimed_served`` maps user to claimed rate (per slot). Reception uses
    the nulling carried by the schedule itself; ``nulling`` is the declared
    plan and any disagreement is reported. The report lists every failure
    instead of raising.
    """
    failures: list[str] = []
    try:
        doc = schedule if isinstance(schedule, Mapping) else schedule_to_json(schedule)
        per_helper = schedule_from_json(doc)
        observations = simulate_reception(doc, topology, pattern)
    except ScheduleSchemaError as exc:
        return VerificationReport(False, {}, [f"schema: {exc}"])
    declared = {int(h): frozenset(z) for h, z in (nulling or {}).items() if z}
    for h, txs in per_helper.items():
        for slot, tx in enumerate(txs):
            if tx.helper_nulling != declared.get(h, frozenset()):
                failures.append(f"helper {h} slot {slot}: nulling {sorted(tx.helper_nulling)} differs from plan")
    slots_of = {h: len(txs) for h, txs in per_helper.items()}
    all_indices = subpacket_indices(L, t)
    ledgers = {}
    for k in range(topology.num_users):
        mine = profiles[k]
        claim = float(claimed_served.get(k, 0.0))
        led = UserLedger(k, claim > 0, claimed_rate=claim)
        delivering: set[int] = set()
        recovered: set[SubpacketIndex] = set()
        for ob in observations[k]:
            led.cancelled_by_nulling += len(ob.nulled)
            if ob.collided:
                led.collisions += 1
                continue
            if ob.out_of_range or not ob.received:
                continue
            led.received += len(ob.received)
            unknown = [(term, h) for term, h in ob.received if mine not in term.subpacket.profiles]
            led.cancelled_by_cache += len(ob.received) - len(unknown)
            if len(unknown) != 1:
                continue
            term, h = unknown[0]
            if term.subpacket.chunk != requests[k]:
                continue
            h_tx = per_helper[h][ob.slot]
            if h_tx.kind == SUPERPOSITION:
                for other in h_tx.terms:
                    if k in other.nulled and mine in other.subpacket.profiles:
                        failures.append(f"user {k} slot {ob.slot}: term both cached and nulled")
            if term.subpacket not in recovered:
                recovered.add(term.subpacket)
                led.recovered.append(term.subpacket)
            delivering.add(h)
        needed = {SubpacketIndex(requests[k], S) for S in all_indices}
        cached = {s for s in needed if mine in s.profiles}
        if led.served:
            problems = []
            if recovered | cached != needed:
                missing = sorted(needed - cached - recovered)
                problems.append(f"missing {[s.label() for s in missing]}")
            if len(delivering) != 1:
                problems.append(f"delivered by helpers {sorted(delivering)}")
            else:
                h = next(iter(delivering))
                # one chunk per cycle of the serving helper
                chunks = (len(recovered) + len(cached)) / comb(L, t)
                led.achieved_rate = chunks / slots_of[h] if recovered | cached == needed else 0.0
                if abs(led.achieved_rate - claim) > 1e-12:
                    problems.append(f"achieved rate {led.achieved_rate:.6g} != claimed {claim:.6g}")
            if problems:
                led.verdict = "fail"
                failures.extend(f"user {k}: {p}" for p in problems)
        elif recovered:
            led.verdict = "fail"
            failures.append(f"user {k}: unclaimed user recovered {len(recovered)} subpackets")
        ledgers[k] = led
    return VerificationReport(not failures, ledgers, failures)


def verify_policy(policy, topology, profiles, requests, L, t, mux_gain=1) -> VerificationReport:
    """Build a policy's schedule and rate vector, then check them against each other."""
    from .policy import policy_rate_vector, policy_schedule

    schedule = schedule_to_json(policy_schedule(policy, profiles, requests, L, t, mux_gain))
    rates = policy_rate_vector(policy, profiles, L, t, topology.num_users)
    claimed = {k: float(r) for k, r in enumerate(rates) if r > 0}
    return verify_schedule(schedule, topology, policy.pattern, policy.nulling_plan, profiles, L, t, requests, claimed)
