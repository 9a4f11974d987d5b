import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_pareto
from ccwlan import _kernels_py, kernels

try:
    from ccwlan import _kernels_cy
except ImportError:
    _kernels_cy = None

BACKENDS = [_kernels_py] + ([_kernels_cy] if _kernels_cy is not None else [])


def random_families(rng):
    K = int(rng.integers(1, 12))
    fam_ptr, grp_ptr, rates, caps, users = [0], [0], [], [], []
    for _ in range(int(rng.integers(0, 6))):
        for _ in range(int(rng.integers(0, 4))):
            members = rng.choice(K, size=int(rng.integers(1, K + 1)), replace=False)
            users.extend(members.tolist())
            grp_ptr.append(len(users))
            rates.append(float(rng.uniform(0.05, 1.0)))
            caps.append(int(rng.integers(1, 5)))
        fam_ptr.append(len(rates))
    arrays = (
        np.array(fam_ptr, dtype=np.int64),
        np.array(grp_ptr, dtype=np.int64),
        np.array(rates),
        np.array(caps, dtype=np.int32),
        np.array(users, dtype=np.int32),
    )
    return rng.normal(size=K), arrays


def loop_scores(grad, fam_ptr, grp_ptr, rates, caps, users):
    out = []
    for f in range(len(fam_ptr) - 1):
        s = 0.0
        for g in range(fam_ptr[f], fam_ptr[f + 1]):
            vals = sorted((grad[u] for u in users[grp_ptr[g]:grp_ptr[g + 1]]), reverse=True)
            s += rates[g] * sum(vals[: caps[g]])
        out.append(s)
    return np.array(out)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_family_scores_match_loop(impl, seed):
    grad, arrays = random_families(np.random.default_rng(seed))
    assert np.allclose(impl.family_scores(grad, *arrays), loop_scores(grad, *arrays), rtol=0, atol=1e-12)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.BACKEND)
@settings(max_examples=300, deadline=None)
@given(rows=st.lists(st.lists(st.sampled_from([0.0, 0.25, 0.5, 1.0]), min_size=3, max_size=3), max_size=30))
def test_pareto_mask_matches_pairwise(impl, rows):
    V = np.array(rows).reshape(len(rows), 3)
    mask = impl.pareto_mask(V)
    assert {tuple(V[i]) for i in np.flatnonzero(mask)} == {tuple(V[i]) for i in brute_pareto(rows)}
    assert mask.sum() == len({tuple(V[i]) for i in np.flatnonzero(mask)})


@pytest.mark.skipif(_kernels_cy is None, reason="compiled kernels not built")
def test_backends_agree():
    rng = np.random.default_rng(0)
    for _ in range(50):
        grad, arrays = random_families(rng)
        # summation order differs, so scores agree to rounding only
        a, b = _kernels_cy.family_scores(grad, *arrays), _kernels_py.family_scores(grad, *arrays)
        assert np.allclose(a, b, rtol=0, atol=1e-12)
        V = rng.integers(0, 3, size=(40, 4)).astype(float)
        assert np.array_equal(_kernels_cy.pareto_mask(V), _kernels_py.pareto_mask(V))


def test_default_backend():
    expected = "cython" if _kernels_cy is not None and os.environ.get("CCWLAN_PURE_PYTHON", "") in ("", "0") else "python"
    assert kernels.BACKEND == expected


def test_env_forces_python_backend():
    env = dict(os.environ, CCWLAN_PURE_PYTHON="1")
    out = subprocess.run(
        [sys.executable, "-c", "import ccwlan; print(ccwlan.BACKEND)"], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "python"
