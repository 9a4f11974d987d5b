import math

import numpy as np
import pytest
from scipy.stats import chisquare

from ccwlan.errors import InvalidParametersError
from ccwlan.placement import (
    PlacementParams,
    SubpacketIndex,
    assign_profiles,
    assign_requests,
    cached_at,
    compute_t,
    missing_subpackets,
    subpacket_indices,
)


@pytest.mark.parametrize("L,ratio,t", [(5, 0.2, 1), (10, 0.2, 2), (20, 0.2, 4), (3, 1 / 3, 1), (4, 0.5, 2)])
def test_compute_t(L, ratio, t):
    assert compute_t(L, ratio, 1) == t


@pytest.mark.parametrize("L,M,N", [(3, 0.5, 1), (5, 0, 1), (5, 1, 1), (5, 2, 1), (0, 1, 5)])
def test_compute_t_rejects(L, M, N):
    with pytest.raises(InvalidParametersError):
        compute_t(L, M, N)


def test_params():
    assert PlacementParams.from_cache_ratio(5, 0.2).subpackets_per_chunk == 5
    assert PlacementParams(1, 0).subpackets_per_chunk == 1
    with pytest.raises(InvalidParametersError):
        PlacementParams(3, 3)


def test_subpacket_indices():
    assert subpacket_indices(3, 1) == [(1,), (2,), (3,)]
    assert subpacket_indices(3, 2) == [(1, 2), (1, 3), (2, 3)]
    assert len(subpacket_indices(5, 1)) == 5
    assert subpacket_indices(4, 0) == [()]


def test_cached_at():
    assert cached_at(2, SubpacketIndex(2, (2,)))
    assert not cached_at(1, (2, 3))


def test_missing_subpackets_example():
    assert [s.label() for s in missing_subpackets(2, 2, 3, 1)] == ["C_1", "C_3"]
    assert missing_subpackets(1, 0, 1, 0) == [SubpacketIndex(0, ())]


@pytest.mark.parametrize("L", range(1, 8))
def test_partition_counts(L):
    for t in range(L):
        sets = subpacket_indices(L, t)
        assert len(set(sets)) == len(sets) == math.comb(L, t)
        for l in range(1, L + 1):
            cached = [S for S in sets if cached_at(l, S)]
            missing = missing_subpackets(l, 0, L, t)
            assert len(cached) == (math.comb(L - 1, t - 1) if t else 0)
            assert len(missing) == math.comb(L - 1, t)
            assert len(cached) + len(missing) == len(sets)


def test_assign_profiles():
    assert assign_profiles(0, 4, 1) == {}
    assert set(assign_profiles(20, 1, 1).values()) == {1}
    assert assign_profiles(30, 5, 7) == assign_profiles(30, 5, 7)
    draws = list(assign_profiles(10_000, 5, 3).values())
    counts = np.bincount(draws, minlength=6)[1:]
    assert chisquare(counts).pvalue > 0.01


def test_assign_requests_distinct():
    assert assign_requests(4) == {0: 0, 1: 1, 2: 2, 3: 3}
    req = assign_requests(50, 9)
    assert sorted(req.values()) == list(range(50))
