"""Command line entry point.

    ccwlan run --rings 1 --users-per-helper 5 --profiles 5 --cache-ratio 0.2 \\
               --mux-gain 2 --mode all --seed 0 --seed 1 --out results/
    ccwlan policies --topology figure1 --profiles 3 --cache-ratio 1/3 --mode ir --mux-gain 2
    ccwlan verify audit.json

Errors are reported on stderr as one JSON object and a nonzero exit code.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from fractions import Fraction
from pathlib import Path

from .errors import CodedCachingError, ConfigError
from .experiment import ExperimentConfig, run_experiment

# CLI flag -> ExperimentConfig field
_RUN_FLAGS = {
    "rings": "rings",
    "topology": "topology",
    "users_per_helper": "users_per_helper",
    "profiles": "profiles",
    "cache_ratio": "cache_ratio",
    "mux_gain": "mux_gain",
    "mode": "mode",
    "fairness_parameter": "fairness_parameter",
    "tolerance": "tolerance",
    "out": "output_dir",
    "workers": "workers",
    "max_policies": "max_policies",
    "max_families": "max_families",
}


def _fairness(text: str) -> float:
    return float("inf") if text.lower() in ("inf", "maxmin", "max-min") else float(text)


def _ratio(text: str) -> float:
    return float(Fraction(text))


def _add_instance_flags(p: argparse.ArgumentParser):
    p.add_argument("--rings", type=int, help="hexagon rings around the central cell (H = 1 + 3r(r+1))")
    p.add_argument("--topology", help="instance JSON file, or 'figure1' for the bundled example")
    p.add_argument("--users-per-helper", type=float, help="mean users per helper U")
    p.add_argument("--profiles", type=int, help="cache profile count L")
    p.add_argument("--cache-ratio", type=_ratio, help="M/N, decimal or fraction such as 1/3")
    p.add_argument("--mux-gain", type=int, help="spatial multiplexing gain")
    p.add_argument("--mode", choices=["siso", "ir", "ccc", "all"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ccwlan", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a seeded experiment and write result files")
    run.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")
    _add_instance_flags(run)
    run.add_argument("--fairness-parameter", type=_fairness, help="alpha-fairness parameter (1 = proportional, inf = max-min)")
    run.add_argument("--seed", type=int, action="append", dest="seed", help="repeatable")
    run.add_argument("--seeds-file", help="file with one seed per line, or a JSON list")
    run.add_argument("--tolerance", type=float, help="duality-gap tolerance of the fairness solver")
    run.add_argument("--max-policies", type=int)
    run.add_argument("--max-families", type=int)
    run.add_argument("--no-sampling", action="store_true", help="fail instead of sampling past the limits")
    run.add_argument("--no-verify", action="store_true", help="skip oracle checks of the weighted policies")
    run.add_argument("--workers", type=int, help="process seeds concurrently")
    run.add_argument("--out", help="output directory")

    pol = sub.add_parser("policies", help="dump every policy of one instance with rate vectors")
    _add_instance_flags(pol)
    pol.add_argument("--seed", type=int, default=0)
    pol.add_argument("--pattern", help="only this activation pattern, e.g. 1,1")
    pol.add_argument("--prune", action="store_true", help="keep only Pareto-maximal rate vectors")
    pol.add_argument("--schedules", action="store_true", help="include each policy's schedule (verify input)")
    pol.add_argument("--out", help="write JSON here instead of stdout")

    ver = sub.add_parser("verify", help="check audit documents written by 'policies --schedules'")
    ver.add_argument("audit", help="JSON audit document")
    ver.add_argument("--out", help="write the verification reports here instead of stdout")
    return parser


def _read_seeds(path: str) -> list[int]:
    text = Path(path).read_text().strip()
    if text.startswith("["):
        return [int(s) for s in json.loads(text)]
    return [int(line) for line in text.splitlines() if line.strip() and not line.startswith("#")]


def config_from_args(args) -> ExperimentConfig:
    doc = {}
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", str(exc)) from None
    for flag, name in _RUN_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            doc[name] = value
    if getattr(args, "seeds_file", None):
        doc["seeds"] = _read_seeds(args.seeds_file)
    if getattr(args, "seed", None):
        doc["seeds"] = list(args.seed) if isinstance(args.seed, list) else [args.seed]
    if getattr(args, "no_sampling", False):
        doc["sampling"] = False
    if getattr(args, "no_verify", False):
        doc["verify"] = False
    return ExperimentConfig.from_dict(doc).validate()


def _cmd_run(args) -> int:
    config = config_from_args(args)
    result = run_experiment(config)
    print(json.dumps(result["aggregate"], indent=2, sort_keys=True))
    return 0


def _cmd_policies(args) -> int:
    from .experiment import _instance
    from .delivery import schedule_to_json
    from .policy import enumerate_policies, policy_schedule, prune_rate_vectors

    config = config_from_args(args)
    config.seeds = [args.seed]
    topo, profiles, requests = _instance(config, args.seed)
    L, t = config.profiles, config.t
    modes = config.modes
    rows = []
    for mode in modes:
        pairs = enumerate_policies(topo, profiles, L, t, mode, config.mux_gain, config.limits)
        if args.pattern:
            want = [int(b) for b in args.pattern.split(",")]
            pairs = [(p, r) for p, r in pairs if [int(b) for b in p.pattern.bits] == want]
        if args.prune and pairs:
            _, idx = prune_rate_vectors([r for _, r in pairs], return_index=True)
            pairs = [pairs[i] for i in sorted(idx)]
        for p, r in pairs:
            row = p.to_json()
            row["rates"] = [float(x) for x in r]
            if args.schedules:
                row.update(schedule_to_json(policy_schedule(p, profiles, requests, L, t, config.mux_gain)))
                row["L"], row["t"] = L, t
            rows.append(row)
    doc = {
        "topology": topo.to_json(),
        "profiles": [profiles[k] for k in range(topo.num_users)],
        "requests": [requests[k] for k in range(topo.num_users)],
        "L": L,
        "t": t,
        "policies": rows,
    }
    _emit(doc, args.out)
    return 0


def _cmd_verify(args) -> int:
    from .oracle import verify_schedule
    from .topology import NetworkTopology

    doc = json.loads(Path(args.audit).read_text())
    topo = NetworkTopology.from_json(doc["topology"])
    profiles = dict(enumerate(doc["profiles"]))
    requests = dict(enumerate(doc["requests"]))
    reports = []
    ok = True
    for row in doc["policies"]:
        claimed = {k: r for k, r in enumerate(row["rates"]) if r > 0}
        nulling = {int(h): z for h, z in row.get("nulling", {}).items()}
        rep = verify_schedule(row, topo, row["pattern"], nulling, profiles, doc["L"], doc["t"], requests, claimed)
        ok &= rep.passed
        reports.append(rep.to_json())
    _emit({"passed": ok, "reports": reports}, args.out)
    return 0 if ok else 1


def _emit(doc, out):
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return {"run": _cmd_run, "policies": _cmd_policies, "verify": _cmd_verify}[args.command](args)
    except ConfigError as exc:
        err = {"error": "invalid-config", "field": exc.field, "message": exc.message}
    except CodedCachingError as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
    sys.stderr.write(json.dumps(err) + "\n")
    return 2


if __name__ == "__main__":
    sys.exit(main())
