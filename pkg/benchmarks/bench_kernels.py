"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Times the two hot paths on realistic inputs: the family scoring used by the
fairness solver's linear oracle, and the Pareto filter over rate vectors.
Also times one full solve on a generated instance with each backend.
"""
import argparse
import time

import numpy as np

from ccwlan import _kernels_py
from ccwlan.experiment import ExperimentConfig, _instance
from ccwlan.fairness import maximize_fairness
from ccwlan.policy import FamilyVertices, build_policy_families

try:
    from ccwlan import _kernels_cy
except ImportError:
    _kernels_cy = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def family_inputs(seed=0):
    config = ExperimentConfig(rings=1, users_per_helper=5, profiles=5, cache_ratio=0.2, mux_gain=2, mode="ir")
    topo, profiles, _ = _instance(config, seed)
    fams = build_policy_families(topo, profiles, 5, 1, "ir", 2, config.limits).families
    fv = FamilyVertices(fams, topo.num_users)
    grad = np.random.default_rng(seed).normal(size=topo.num_users)
    return fv, grad


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = [_kernels_py] + ([_kernels_cy] if _kernels_cy else [])

    fv, grad = family_inputs()
    arrays = (fv._fam_ptr, fv._grp_ptr, fv._rates, fv._caps, fv._users)
    V = np.random.default_rng(1).integers(0, 4, size=(4000, 8)).astype(float) / 3

    print(f"family_scores: {len(fv)} families, {len(fv._rates)} groups; pareto_mask: {V.shape[0]}x{V.shape[1]}")
    res = {}
    for impl in backends:
        fs = best_of(lambda: impl.family_scores(grad, *arrays), args.repeat)
        pm = best_of(lambda: impl.pareto_mask(V), args.repeat)
        res[impl.BACKEND] = (fs, pm)
        print(f"{impl.BACKEND:>7}  family_scores {fs * 1e3:8.2f} ms   pareto_mask {pm * 1e3:8.2f} ms")

    # full solve: swap the kernel the vertex set calls into
    from ccwlan import policy

    for impl in backends:
        saved = policy.kernels.family_scores
        policy.kernels.family_scores = impl.family_scores
        try:
            dt = best_of(lambda: maximize_fairness(fv), max(1, args.repeat // 2))
        finally:
            policy.kernels.family_scores = saved
        print(f"{impl.BACKEND:>7}  maximize_fairness {dt:8.3f} s")

    if len(res) == 2:
        py, cy = res["python"], res["cython"]
        print(f"speedup  family_scores x{py[0] / cy[0]:.1f}   pareto_mask x{py[1] / cy[1]:.1f}")


if __name__ == "__main__":
    main()
