"""Seeded experiment runner: instances, per-mode fairness optimum, result files."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path
from statistics import mean, median
from typing import Sequence

import numpy as np

from .errors import CodedCachingError, ConfigError
from .fairness import FairnessObjective, maximize_fairness, utility
from .oracle import verify_policy
from .placement import PlacementParams, assign_profiles, assign_requests, compute_t
from .policy import MODES, EnumerationLimits, FamilyVertices, build_policy_families
from .topology import NetworkTopology, build_hex_grid, canonical_figure1, load_instance, place_users

log = logging.getLogger(__name__)

__version__ = "0.1.0"


@dataclass
class ExperimentConfig:
    rings: int = 1
    topology: str | None = None  # instance JSON path, or "figure1"
    users_per_helper: float = 5.0
    profiles: int = 5
    cache_ratio: float = 0.2
    mux_gain: int = 2
    mode: str = "all"
    fairness_parameter: float = 1.0
    seeds: list[int] = field(default_factory=lambda: [0])
    tolerance: float = 1e-6
    max_iter: int = 100_000
    r_trans: float = 1.0
    r_inter: float = 1.2
    max_exhaustive_helpers: int = 12
    max_policies: int = 500_000
    max_families: int = 500_000
    sampling: bool = True
    verify: bool = True
    workers: int = 1
    output_dir: str | None = None

    @property
    def modes(self) -> tuple[str, ...]:
        return MODES if self.mode == "all" else (self.mode,)

    @property
    def t(self) -> int:
        # a single profile is the uncoded scheme: nothing is cached
        if self.profiles == 1:
            return 0
        return compute_t(self.profiles, self.cache_ratio, 1)

    @property
    def limits(self) -> EnumerationLimits:
        return EnumerationLimits(
            max_exhaustive_helpers=self.max_exhaustive_helpers,
            max_policies=self.max_policies,
            max_families=self.max_families,
            sampling=self.sampling,
        )

    def validate(self) -> "ExperimentConfig":
        if self.mode not in MODES + ("all",):
            raise ConfigError("mode", f"must be one of {', '.join(MODES + ('all',))}")
        if self.topology is None and self.rings < 0:
            raise ConfigError("rings", "must be nonnegative")
        if not self.users_per_helper > 0:
            raise ConfigError("users_per_helper", "must be positive")
        if self.profiles < 1:
            raise ConfigError("profiles", "must be at least 1")
        if self.mux_gain < 1:
            raise ConfigError("mux_gain", "must be at least 1")
        if not self.fairness_parameter >= 0:
            raise ConfigError("fairness_parameter", "must be nonnegative")
        if not self.tolerance > 0:
            raise ConfigError("tolerance", "must be positive")
        if not self.seeds:
            raise ConfigError("seeds", "at least one seed is required")
        if not 0 < self.r_trans <= self.r_inter:
            raise ConfigError("r_inter", "need 0 < r_trans <= r_inter")
        try:
            PlacementParams(self.profiles, self.t)
        except CodedCachingError as exc:
            raise ConfigError("cache_ratio", str(exc)) from None
        return self

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(sorted(unknown)[0], "unknown configuration field")
        return cls(**doc)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc.pop("workers")
        doc.pop("output_dir")
        return doc


def _instance(config: ExperimentConfig, seed: int):
    place_ss, prof_ss, req_ss = np.random.SeedSequence(seed).spawn(3)
    profiles = None
    if config.topology:
        inst = canonical_figure1() if config.topology == "figure1" else load_instance(config.topology)
        topo = inst.topology
        if inst.profiles:
            if max(inst.profiles.values()) > config.profiles:
                raise ConfigError("profiles", f"instance uses profile {max(inst.profiles.values())}")
            profiles = inst.profiles
    else:
        helpers = build_hex_grid(config.rings)
        users = place_users(helpers, config.users_per_helper, place_ss, config.r_trans)
        topo = NetworkTopology.from_coordinates(helpers, users, config.r_trans, config.r_inter)
    K = topo.num_users
    if profiles is None:
        profiles = assign_profiles(K, config.profiles, prof_ss)
    return topo, profiles, assign_requests(K, req_ss)


def run_seed(config: ExperimentConfig, seed: int) -> dict:
    """One instance, every requested mode."""
    topo, profiles, requests = _instance(config, seed)
    L, t = config.profiles, config.t
    K = topo.num_users
    scale = math.comb(L, t)  # transmissions are subpacket-sized: C(L, t) slots per chunk time
    objective = FairnessObjective(config.fairness_parameter)
    record = {
        "seed": seed,
        "H": topo.num_helpers,
        "K": K,
        "t": t,
        "unreachable_users": list(topo.unreachable_users()),
        "modes": {},
    }
    for mode in config.modes:
        fs = build_policy_families(topo, profiles, L, t, mode, config.mux_gain, config.limits)
        entry = {
            "families": len(fs.families),
            "sampled": fs.sampled,
        }
        if K == 0 or not fs.families:
            entry.update(utility=0.0, utility_per_slot=0.0, round_abs=0, throughput=[0.0] * K,
                         throughput_per_slot=[0.0] * K, weights=[], diagnostics={}, verification={"checked": 0, "passed": True})
            record["modes"][mode] = entry
            continue
        vertices = FamilyVertices(fs.families, K)
        point = maximize_fairness(vertices, objective, config.tolerance, config.max_iter)
        counted = [k for k in range(K) if k not in set(point.excluded_users)]
        chunk_rates = point.throughput * scale
        u_chunk = utility(chunk_rates, objective, counted)
        weights = []
        checked, failures = 0, []
        for key, w in sorted(point.weights.items(), key=lambda kw: (-kw[1], repr(kw[0]))):
            if w <= 1e-9:
                continue
            pol = vertices.policy(key)
            row = {"weight": float(w), "policy": pol.to_json()}
            if config.verify:
                report = verify_policy(pol, topo, profiles, requests, L, t, config.mux_gain)
                checked += 1
                row["verified"] = report.passed
                if not report.passed:
                    failures.extend(report.failures)
            weights.append(row)
        entry.update(
            utility=u_chunk,
            utility_per_slot=point.utility,
            round_abs=int(round(abs(u_chunk))),
            throughput=[float(x) for x in chunk_rates],
            throughput_per_slot=[float(x) for x in point.throughput],
            excluded_users=list(point.excluded_users),
            weights=weights,
            diagnostics={"iterations": point.iterations, "gap": float(point.gap), "cap_hit": point.cap_hit},
            verification={"checked": checked, "passed": not failures, "failures": failures[:20]},
        )
        record["modes"][mode] = entry
    return record


def emit_cdf(rates: Sequence[float]) -> list[tuple[float, float]]:
    """Empirical CDF rows ``(value, fraction <= value)`` over distinct values."""
    x = np.sort(np.asarray(rates, dtype=float))
    n = len(x)
    if n == 0:
        return []
    values, counts = np.unique(x, return_counts=True)
    return [(float(v), float(c) / n) for v, c in zip(values, np.cumsum(counts))]


def _aggregate(runs: list[dict], modes) -> dict:
    agg = {}
    for mode in modes:
        us = [r["modes"][mode]["utility"] for r in runs]
        agg[mode] = {
            "seeds": len(us),
            "mean_utility": mean(us),
            "median_utility": median(us),
            "mean_round_abs": mean(r["modes"][mode]["round_abs"] for r in runs),
            "mean_utility_per_slot": mean(r["modes"][mode]["utility_per_slot"] for r in runs),
            "all_verified": all(r["modes"][mode]["verification"]["passed"] for r in runs),
            "sampled_seeds": sum(r["modes"][mode]["sampled"] for r in runs),
        }
    return agg


def run_experiment(config: ExperimentConfig) -> dict:
    """Run every seed, aggregate, and write result files when ``output_dir`` is set."""
    config.validate()
    seeds = list(config.seeds)
    if config.workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            runs = list(pool.map(run_seed, [config] * len(seeds), seeds))
    else:
        runs = [run_seed(config, s) for s in seeds]
    result = {
        "config": config.to_dict(),
        "runs": runs,
        "aggregate": _aggregate(runs, config.modes),
    }
    if config.output_dir:
        write_outputs(result, config, Path(config.output_dir))
    return result


def write_outputs(result: dict, config: ExperimentConfig, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    doc = {"metadata": {"generated_at": datetime.now(timezone.utc).isoformat(), "version": __version__}}
    doc.update(result)
    p = out / "results.json"
    p.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    written.append(p)

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "mode", "H", "K", "utility", "utility_per_slot", "round_abs", "sampled"])
    for run in result["runs"]:
        for mode in config.modes:
            e = run["modes"][mode]
            w.writerow([run["seed"], mode, run["H"], run["K"], repr(e["utility"]), repr(e["utility_per_slot"]),
                        e["round_abs"], int(e["sampled"])])
    p = out / "utilities.csv"
    p.write_text(buf.getvalue())
    written.append(p)

    for mode in config.modes:
        rates = [x for run in result["runs"] for x in run["modes"][mode]["throughput"]]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rate", "cdf"])
        for v, c in emit_cdf(rates):
            w.writerow([repr(v), repr(c)])
        p = out / f"cdf_{mode}_L{config.profiles}.csv"
        p.write_text(buf.getvalue())
        written.append(p)
    return written

