"""Geometric network model: helper grid, user placement, reachability queries."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import InconsistentPolicyError, InvalidTopologyError

# distance ties count as inside a radius
_TIE_EPS = 1e-9

# axial neighbour directions, in walking order around a ring
_HEX_DIRS = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))


class Point2D(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class ActivationPattern:
    """On/off state of every helper for one time slot."""

    bits: tuple[bool, ...]

    @classmethod
    def from_mask(cls, mask: int, num_helpers: int) -> "ActivationPattern":
        return cls(tuple(bool(mask >> i & 1) for i in range(num_helpers)))

    @classmethod
    def coerce(cls, pattern, num_helpers: int | None = None) -> "ActivationPattern":
        if not isinstance(pattern, ActivationPattern):
            pattern = cls(tuple(bool(b) for b in pattern))
        if num_helpers is not None and len(pattern.bits) != num_helpers:
            raise InvalidTopologyError(
                f"activation pattern has {len(pattern.bits)} bits, network has {num_helpers} helpers"
            )
        return pattern

    @property
    def active(self) -> tuple[int, ...]:
        return tuple(i for i, b in enumerate(self.bits) if b)

    @property
    def mask(self) -> int:
        return sum(1 << i for i, b in enumerate(self.bits) if b)

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return "[" + ",".join("1" if b else "0" for b in self.bits) + "]"


def mask_of(users: Iterable[int]) -> int:
    m = 0
    for u in users:
        m |= 1 << int(u)
    return m


def members(mask: int) -> tuple[int, ...]:
    out = []
    k = 0
    while mask:
        if mask & 1:
            out.append(k)
        mask >>= 1
        k += 1
    return tuple(out)


@dataclass(frozen=True, eq=False)
class NetworkTopology:
    """Helpers, users and the two reachability relations between them.

    ``in_trans[i, k]`` is true when user ``k`` can decode helper ``i``;
    ``in_inter[i, k]`` when helper ``i`` interferes at user ``k``. Coordinates
    are optional: the reachability-only form is used for hand-built examples.
    """

    in_trans: np.ndarray
    in_inter: np.ndarray
    r_trans: float = 1.0
    r_inter: float = 1.2
    helpers: tuple[Point2D, ...] | None = None
    users: tuple[Point2D, ...] | None = None
    user_labels: tuple[str, ...] | None = None
    trans_masks: tuple[int, ...] = field(init=False, repr=False)
    inter_masks: tuple[int, ...] = field(init=False, repr=False)

    def __post_init__(self):
        in_trans = np.array(self.in_trans, dtype=bool, copy=True)
        in_inter = np.array(self.in_inter, dtype=bool, copy=True)
        if in_trans.ndim != 2 or in_trans.shape != in_inter.shape:
            raise InvalidTopologyError("reachability matrices must share shape (H, K)")
        if in_trans.shape[0] < 1:
            raise InvalidTopologyError("a topology needs at least one helper")
        if not self.r_trans > 0 or self.r_inter < self.r_trans:
            raise InvalidTopologyError("radii must satisfy 0 < r_trans <= r_inter")
        if np.any(in_trans & ~in_inter):
            raise InvalidTopologyError("transmission range must lie inside interference range")
        in_trans.flags.writeable = False
        in_inter.flags.writeable = False
        object.__setattr__(self, "in_trans", in_trans)
        object.__setattr__(self, "in_inter", in_inter)
        object.__setattr__(self, "trans_masks", tuple(mask_of(np.flatnonzero(r)) for r in in_trans))
        object.__setattr__(self, "inter_masks", tuple(mask_of(np.flatnonzero(r)) for r in in_inter))

    @property
    def num_helpers(self) -> int:
        return self.in_trans.shape[0]

    @property
    def num_users(self) -> int:
        return self.in_trans.shape[1]

    def label(self, k: int) -> str:
        return self.user_labels[k] if self.user_labels else f"u{k + 1}"

    @classmethod
    def from_coordinates(cls, helpers, users, r_trans: float = 1.0, r_inter: float = 1.2):
        h = np.asarray(helpers, dtype=float).reshape(-1, 2)
        u = np.asarray(users, dtype=float).reshape(-1, 2)
        if len(h) == 0:
            raise InvalidTopologyError("no helpers")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(u))):
            raise InvalidTopologyError("coordinates must be finite")
        d = np.sqrt(((h[:, None, :] - u[None, :, :]) ** 2).sum(axis=-1))
        return cls(
            in_trans=d <= r_trans + _TIE_EPS,
            in_inter=d <= r_inter + _TIE_EPS,
            r_trans=r_trans,
            r_inter=r_inter,
            helpers=tuple(Point2D(*map(float, p)) for p in h),
            users=tuple(Point2D(*map(float, p)) for p in u),
        )

    def unreachable_users(self) -> tuple[int, ...]:
        """Users outside every helper's transmission range."""
        return tuple(int(k) for k in np.flatnonzero(~self.in_trans.any(axis=0)))

    # --- JSON ----------------------------------------------------------------

    def to_json(self) -> dict:
        doc = {"r_trans": self.r_trans, "r_inter": self.r_inter}
        if self.helpers is not None and self.users is not None:
            doc["helpers"] = [list(p) for p in self.helpers]
            doc["users"] = [list(p) for p in self.users]
        else:
            doc["num_users"] = self.num_users
            doc["in_trans"] = [list(members(m)) for m in self.trans_masks]
            doc["in_inter"] = [list(members(m)) for m in self.inter_masks]
        if self.user_labels:
            doc["user_labels"] = list(self.user_labels)
        return doc

    @classmethod
    def from_json(cls, doc: Mapping) -> "NetworkTopology":
        r_trans = float(doc.get("r_trans", 1.0))
        r_inter = float(doc.get("r_inter", 1.2))
        labels = tuple(doc["user_labels"]) if doc.get("user_labels") else None
        if "helpers" in doc:
            topo = cls.from_coordinates(doc["helpers"], doc.get("users", []), r_trans, r_inter)
            if labels:
                object.__setattr__(topo, "user_labels", labels)
            return topo
        try:
            K = int(doc["num_users"])
            trans_lists, inter_lists = doc["in_trans"], doc["in_inter"]
        except KeyError as exc:
            raise InvalidTopologyError(f"topology document lacks {exc}") from None
        H = len(trans_lists)
        if len(inter_lists) != H:
            raise InvalidTopologyError("in_trans and in_inter list different helper counts")
        in_trans = np.zeros((H, K), dtype=bool)
        in_inter = np.zeros((H, K), dtype=bool)
        for i in range(H):
            in_trans[i, list(trans_lists[i])] = True
            in_inter[i, list(inter_lists[i])] = True
        return cls(in_trans, in_inter, r_trans, r_inter, user_labels=labels)


class Instance(NamedTuple):
    """A topology bundled with a profile assignment (user -> profile in 1..L)."""

    topology: NetworkTopology
    profiles: dict[int, int]
    L: int


def save_instance(path, topology: NetworkTopology, profiles: Mapping[int, int] | None = None, L: int | None = None):
    doc = {"topology": topology.to_json()}
    if profiles is not None:
        doc["profiles"] = [int(profiles[k]) for k in range(topology.num_users)]
        doc["L"] = int(L if L is not None else max(profiles.values(), default=1))
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def load_instance(path) -> Instance:
    doc = json.loads(Path(path).read_text())
    return _instance_from_doc(doc)


def _instance_from_doc(doc: Mapping) -> Instance:
    topo = NetworkTopology.from_json(doc["topology"] if "topology" in doc else doc)
    profiles = {}
    if "profiles" in doc:
        profiles = {k: int(p) for k, p in enumerate(doc["profiles"])}
        if len(profiles) != topo.num_users:
            raise InvalidTopologyError("profile list length differs from user count")
    L = int(doc.get("L", max(profiles.values(), default=1)))
    return Instance(topo, profiles, L)


def canonical_figure1() -> Instance:
    """The two-helper, five-user example network, loaded from the bundled fixture."""
    text = resources.files("ccwlan").joinpath("data/figure1.json").read_text()
    return _instance_from_doc(json.loads(text))


# --- geometry ----------------------------------------------------------------


def build_hex_grid(rings: int) -> list[Point2D]:
    """Centers of unit-radius hexagons: the central cell, then ring by ring."""
    if rings < 0:
        raise InvalidTopologyError("rings must be nonnegative")
    axial = [(0, 0)]
    for k in range(1, rings + 1):
        q, r = _HEX_DIRS[4][0] * k, _HEX_DIRS[4][1] * k
        for dq, dr in _HEX_DIRS:
            for _ in range(k):
                axial.append((q, r))
                q, r = q + dq, r + dr
    s3 = math.sqrt(3.0)
    return [Point2D(s3 * (q + r / 2.0), 1.5 * r) for q, r in axial]


def place_users(helpers: Sequence[Point2D], U: float, seed, r_trans: float = 1.0) -> list[Point2D]:
    """Homogeneous Poisson placement over the union of the helpers' transmission disks.

    The user count is Poisson with mean ``U * len(helpers)``; positions are
    drawn by rejection from the bounding box of the disks.
    """
    h = np.asarray(helpers, dtype=float).reshape(-1, 2)
    if len(h) == 0:
        raise InvalidTopologyError("cannot place users without helpers")
    if not U > 0:
        raise InvalidTopologyError("U must be positive")
    rng = np.random.default_rng(seed)
    count = int(rng.poisson(U * len(h)))
    lo = h.min(axis=0) - r_trans
    hi = h.max(axis=0) + r_trans
    placed: list[np.ndarray] = []
    have = 0
    while have < count:
        batch = rng.uniform(lo, hi, size=(max(2 * (count - have), 16), 2))
        d2 = ((batch[:, None, :] - h[None, :, :]) ** 2).sum(axis=-1)
        inside = batch[(d2 <= r_trans * r_trans).any(axis=1)]
        placed.append(inside[: count - have])
        have += len(placed[-1])
    pts = np.concatenate(placed) if placed else np.zeros((0, 2))
    return [Point2D(float(x), float(y)) for x, y in pts]


# --- per-pattern sets --------------------------------------------------------


def _check_plan(topology: NetworkTopology, pattern: ActivationPattern, nulling: Mapping[int, Iterable[int]] | None):
    plan = {}
    for i, users in (nulling or {}).items():
        users = frozenset(users)
        if not users:
            continue
        if not (0 <= i < topology.num_helpers and pattern.bits[i]):
            raise InconsistentPolicyError(f"nulling plan references inactive helper h{i + 1}")
        plan[i] = users
    return plan


def coverage_masks(topology: NetworkTopology, active: Sequence[int], null_masks: Mapping[int, int]) -> dict[int, int]:
    """Bitmask form of :func:`coverage_sets` (no validation)."""
    inter = topology.inter_masks
    # blocked-by[i] = users receiving non-nulled interference from some active helper
    reach = {i: inter[i] & ~null_masks.get(i, 0) for i in active}
    out = {}
    for i in active:
        blocked = 0
        for j in active:
            if j != i:
                blocked |= reach[j]
        out[i] = topology.trans_masks[i] & ~blocked & ~null_masks.get(i, 0)
    return out


def coverage_sets(topology: NetworkTopology, pattern, nulling: Mapping[int, Iterable[int]] | None = None) -> dict[int, frozenset[int]]:
    """Users each active helper can serve under a nulling plan.

    A user qualifies for helper ``i`` when it is inside ``i``'s transmission
    range, ``i`` does not null it, and every other active helper either misses
    it with interference or nulls it.
    """
    pattern = ActivationPattern.coerce(pattern, topology.num_helpers)
    plan = _check_plan(topology, pattern, nulling)
    masks = coverage_masks(topology, pattern.active, {i: mask_of(z) for i, z in plan.items()})
    return {i: frozenset(members(m)) for i, m in masks.items()}


def interference_candidates(topology: NetworkTopology, pattern) -> dict[int, frozenset[int]]:
    """Per active helper, users it interferes with that another active helper could serve."""
    pattern = ActivationPattern.coerce(pattern, topology.num_helpers)
    active = pattern.active
    out = {}
    for i in active:
        others = 0
        for j in active:
            if j != i:
                others |= topology.trans_masks[j]
        out[i] = frozenset(members(topology.inter_masks[i] & others))
    return out
