import json
import math
import subprocess
import sys

import pytest

from ccwlan.cli import main
from ccwlan.errors import ConfigError
from ccwlan.experiment import ExperimentConfig, emit_cdf, run_experiment, run_seed


@pytest.mark.parametrize(
    "field,value",
    [("mode", "mimo"), ("rings", -1), ("profiles", 0), ("mux_gain", 0), ("fairness_parameter", -1.0),
     ("tolerance", 0.0), ("seeds", []), ("cache_ratio", 0.3)],
)
def test_config_errors_name_field(field, value):
    with pytest.raises(ConfigError) as info:
        ExperimentConfig(**{field: value}).validate()
    assert info.value.field == field


def test_unknown_config_field():
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict({"colour": 1})
    assert info.value.field == "colour"


def test_emit_cdf():
    assert emit_cdf([1 / 3, 1 / 3, 1 / 2]) == [(1 / 3, 2 / 3), (1 / 2, 1.0)]
    assert emit_cdf([0.25]) == [(0.25, 1.0)]
    assert emit_cdf([]) == []
    rows = emit_cdf([0.3, 0.1, 0.2, 0.1, 0.0])
    assert [v for v, _ in rows] == sorted({0.3, 0.1, 0.2, 0.0})
    assert all(a[1] < b[1] for a, b in zip(rows, rows[1:])) and rows[-1][1] == 1.0


def test_single_profile_runs_uncoded():
    config = ExperimentConfig(rings=1, users_per_helper=3, profiles=1, cache_ratio=0.2, mux_gain=1, mode="siso", seeds=[0])
    assert config.t == 0
    run = run_seed(config.validate(), 0)["modes"]["siso"]
    assert run["verification"]["passed"]
    assert run["round_abs"] >= 0 and math.isfinite(run["utility"])


def test_figure1_mode_ordering():
    config = ExperimentConfig(topology="figure1", profiles=3, cache_ratio=1 / 3, mux_gain=2, seeds=[0])
    modes = run_experiment(config)["runs"][0]["modes"]
    assert modes["ccc"]["utility"] >= modes["siso"]["utility"] - 1e-5
    assert modes["ir"]["utility"] >= modes["siso"]["utility"] - 1e-5
    assert all(m["verification"]["passed"] and m["verification"]["checked"] > 0 for m in modes.values())


def test_output_files(tmp_path):
    config = ExperimentConfig(rings=1, users_per_helper=2, profiles=4, cache_ratio=0.25, mode="ccc", seeds=[1, 2],
                              output_dir=str(tmp_path))
    result = run_experiment(config)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["cdf_ccc_L4.csv", "results.json", "utilities.csv"]
    rows = (tmp_path / "cdf_ccc_L4.csv").read_text().splitlines()[1:]
    rates = [x for run in result["runs"] for x in run["modes"]["ccc"]["throughput"]]
    assert len(rows) == len(set(rates))
    assert len((tmp_path / "utilities.csv").read_text().splitlines()) == 3
    assert "generated_at" in json.loads((tmp_path / "results.json").read_text())["metadata"]


def test_cli_run(tmp_path, capsys):
    assert main(["run", "--rings", "0", "--users-per-helper", "4", "--profiles", "2", "--cache-ratio", "0.5",
                 "--mode", "all", "--seed", "3", "--seed", "4", "--out", str(tmp_path)]) == 0
    agg = json.loads(capsys.readouterr().out)
    assert set(agg) == {"siso", "ir", "ccc"} and agg["siso"]["seeds"] == 2
    assert (tmp_path / "results.json").exists()


def test_cli_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"rings": 0, "users_per_helper": 3, "profiles": 2, "cache_ratio": 0.5, "mode": "ccc"}))
    seeds = tmp_path / "seeds.txt"
    seeds.write_text("# seeds\n1\n2\n")
    assert main(["run", "--config", str(cfg), "--seeds-file", str(seeds), "--mode", "siso"]) == 0
    agg = json.loads(capsys.readouterr().out)
    assert set(agg) == {"siso"} and agg["siso"]["seeds"] == 2


def test_cli_bad_config_reports_field(capsys):
    assert main(["run", "--profiles", "3", "--cache-ratio", "0.3"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err == {"error": "invalid-config", "field": "cache_ratio", "message": err["message"]}


def test_cli_missing_file(capsys):
    assert main(["verify", "/nonexistent/audit.json"]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "FileNotFoundError"


def test_cli_policies_then_verify(tmp_path, capsys):
    audit = tmp_path / "audit.json"
    assert main(["policies", "--topology", "figure1", "--profiles", "3", "--cache-ratio", str(1 / 3), "--mode", "all",
                 "--mux-gain", "2", "--schedules", "--out", str(audit)]) == 0
    doc = json.loads(audit.read_text())
    assert len(doc["policies"]) == 4 + 11 + 3
    report = tmp_path / "report.json"
    assert main(["verify", str(audit), "--out", str(report)]) == 0
    assert json.loads(report.read_text())["passed"]

    # tampering with a claimed rate must be caught
    doc["policies"][0]["rates"] = [r * 2 for r in doc["policies"][0]["rates"]]
    audit.write_text(json.dumps(doc))
    assert main(["verify", str(audit)]) == 1
    assert not json.loads(capsys.readouterr().out)["passed"]


def test_cli_policies_pattern_and_prune(capsys):
    assert main(["policies", "--topology", "figure1", "--profiles", "3", "--cache-ratio", "1/3", "--mode", "siso",
                 "--pattern", "0,1"]) == 0
    rows = json.loads(capsys.readouterr().out)["policies"]
    assert sorted(r["rates"] for r in rows) == sorted([[0, 0, 1 / 3, 1 / 3, 0], [0, 0, 0, 1 / 3, 1 / 3]])
    assert main(["policies", "--topology", "figure1", "--profiles", "3", "--cache-ratio", str(1 / 3), "--mode", "siso",
                 "--prune"]) == 0
    assert len(json.loads(capsys.readouterr().out)["policies"]) <= 4


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "ccwlan", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "run" in out.stdout
