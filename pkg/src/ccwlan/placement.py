"""Cache placement with L replicated profiles.

Every chunk is split into C(L, t) subpackets, one per t-subset of profiles;
a user with profile ``l`` caches exactly the subpackets whose index set
contains ``l``. Profiles are numbered 1..L.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import NamedTuple

import numpy as np

from .errors import InvalidParametersError


class SubpacketIndex(NamedTuple):
    chunk: int
    profiles: tuple[int, ...]

    def label(self, names=None) -> str:
        name = names[self.chunk] if names else _chunk_name(self.chunk)
        return f"{name}_{''.join(map(str, self.profiles)) or '-'}"


def _chunk_name(n: int) -> str:
    return chr(ord("A") + n) if 0 <= n < 26 else f"W{n}"


def _as_fraction(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**9)
    return Fraction(x)


def compute_t(L: int, M, N) -> int:
    """Global caching parameter ``t = L*M/N``; must be an integer."""
    if L < 1:
        raise InvalidParametersError("L must be at least 1")
    M, N = _as_fraction(M), _as_fraction(N)
    if not 0 < M < N:
        raise InvalidParametersError("cache size must satisfy 0 < M < N")
    t = L * M / N
    if t.denominator != 1:
        raise InvalidParametersError(f"L*M/N = {float(t):g} is not an integer")
    return int(t)


@dataclass(frozen=True)
class PlacementParams:
    """Profile count and the derived caching parameter. ``t = 0`` is the uncoded case."""

    L: int
    t: int

    def __post_init__(self):
        if self.L < 1:
            raise InvalidParametersError("L must be at least 1")
        if not 0 <= self.t < self.L:
            raise InvalidParametersError(f"need 0 <= t < L, got t={self.t}, L={self.L}")

    @classmethod
    def from_cache_ratio(cls, L: int, cache_ratio) -> "PlacementParams":
        return cls(L, compute_t(L, cache_ratio, 1))

    @property
    def subpackets_per_chunk(self) -> int:
        return comb(self.L, self.t)


def subpacket_indices(L: int, t: int) -> list[tuple[int, ...]]:
    """All t-subsets of 1..L in lexicographic order."""
    return list(combinations(range(1, L + 1), t))


def cached_at(profile: int, subpacket) -> bool:
    profiles = subpacket.profiles if isinstance(subpacket, SubpacketIndex) else subpacket
    return profile in profiles


def missing_subpackets(profile: int, chunk: int, L: int, t: int) -> list[SubpacketIndex]:
    return [SubpacketIndex(chunk, S) for S in subpacket_indices(L, t) if profile not in S]


def assign_profiles(K: int, L: int, seed) -> dict[int, int]:
    """I.i.d. uniform profile for each of ``K`` users."""
    if L < 1:
        raise InvalidParametersError("L must be at least 1")
    rng = np.random.default_rng(seed)
    return {k: int(p) for k, p in enumerate(rng.integers(1, L + 1, size=K))}


def assign_requests(K: int, seed=None) -> dict[int, int]:
    """One distinct outstanding chunk per user.

    No two users request the same chunk at the same time, so ids are a
    permutation of ``0..K-1`` (the identity when ``seed`` is None).
    """
    if seed is None:
        return {k: k for k in range(K)}
    perm = np.random.default_rng(seed).permutation(K)
    return {k: int(perm[k]) for k in range(K)}
