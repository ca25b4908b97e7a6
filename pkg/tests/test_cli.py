from __future__ import annotations

import json
from pathlib import Path

import pytest

from crowdlab.cli import main
from crowdlab.report import RunConfig, execute, parse_alpha_grid

SCENARIO_TOML = """\
n_rounds = 2
truth_per_round = [100.0, 120.0]
n_agents = 30
pre_bias = 2.0
pre_sigma = 0.05
crowd_mode = "accurate"
min_prior = 3
seed = 5

[sw]
kind = "uniform"
low = -0.8
high = 0.8
"""

FAST = ["--bootstrap-count", "30", "--dip-mc", "200", "--alpha-grid=-1:1:5"]


@pytest.fixture
def scenario_file(tmp_path: Path) -> Path:
    path = tmp_path / "scenario.toml"
    path.write_text(SCENARIO_TOML)
    return path


def _tree(path: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


def test_simulate_writes_dataset(scenario_file, tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--config", str(scenario_file), "--out", str(out)]) == 0
    assert {p.name for p in out.iterdir()} == {
        "records.csv",
        "truths.csv",
        "true_sw.csv",
        "report.json",
    }
    report = json.loads((out / "report.json").read_text())
    assert report["dataset"]["n_records"] == 60
    assert report["simulated"]["n_exposed"] == 54  # 2 rounds x (30 - 3) exposed


def test_simulate_deterministic_trees(scenario_file, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", str(scenario_file), "--seed", "7", "--out", str(a)]) == 0
    assert main(["simulate", "--config", str(scenario_file), "--seed", "7", "--out", str(b)]) == 0
    assert _tree(a) == _tree(b)


def test_all_pipeline_and_exclusion_table(scenario_file, tmp_path):
    sim = tmp_path / "sim"
    main(["simulate", "--config", str(scenario_file), "--out", str(sim)])
    out = tmp_path / "run"
    rc = main(
        ["all", "--records", str(sim / "records.csv"), "--truths", str(sim / "truths.csv"),
         "--out", str(out), "--seed", "3", *FAST]
    )
    assert rc == 0
    names = {p.name for p in out.iterdir()}
    assert names == {
        "report.json",
        "sw_records.csv",
        "sw_sign_counts.csv",
        "alpha_sweep.csv",
        "unimodality_proportions.csv",
        "improvement_curves.csv",
        "user_improvements.csv",
        "dip_flags.csv",
    }
    report = json.loads((out / "report.json").read_text())
    # each excluded record appears exactly once, with a known reason
    rows = report["exclusions"]["records"]
    assert len({r["record_id"] for r in rows}) == len(rows)
    assert set(report["exclusions"]["counts"]) == {
        "insufficient_prior",
        "undefined_sw",
        "dip_indeterminate",
    }
    counted = sum(report["exclusions"]["counts"].values())
    assert counted == len(rows)
    assert report["exclusions"]["counts"]["insufficient_prior"] == 6
    # sweep points cover the requested grid, and selecting all
    # positive-weight records improves the aggregate on this scenario
    assert [p["alpha"] for p in report["alpha_sweep"]["points"]] == [-1.0, -0.5, 0.0, 0.5, 1.0]
    top = next(p for p in report["alpha_sweep"]["points"] if p["alpha"] == 1.0)
    assert top["mean_improvement"] > 0
    # per-record dip values are exported for external calibration comparison
    dip_lines = (out / "dip_flags.csv").read_text().splitlines()
    assert dip_lines[0] == "record_id,n,dip,p_value,flag"
    assert len(dip_lines) - 1 == 60 - 6  # every record with a shown crowd


def test_scenario_as_analysis_input(scenario_file, tmp_path):
    out = tmp_path / "run"
    rc = main(
        ["analyze", "--scenario", str(scenario_file), "--out", str(out), "--seed", "5"]
    )
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert "sw_summary" in report


def test_missing_input_file_is_usage_error(tmp_path, capsys):
    rc = main(
        ["analyze", "--records", str(tmp_path / "nope.csv"), "--truths", str(tmp_path / "nope2.csv"),
         "--out", str(tmp_path / "x")]
    )
    assert rc == 2
    err = capsys.readouterr().err
    assert "nope.csv" in err
    assert not (tmp_path / "x").exists()


def test_missing_truths_file_names_path(scenario_file, tmp_path, capsys):
    sim = tmp_path / "sim"
    main(["simulate", "--config", str(scenario_file), "--out", str(sim)])
    rc = main(
        ["analyze", "--records", str(sim / "records.csv"), "--truths", str(tmp_path / "absent.csv"),
         "--out", str(tmp_path / "x")]
    )
    assert rc == 2
    assert "absent.csv" in capsys.readouterr().err


def test_malformed_csv_exit_code(tmp_path):
    records = tmp_path / "records.csv"
    records.write_text("record_id,round_id\n1,2\n")
    truths = tmp_path / "truths.csv"
    truths.write_text("round_id,truth\nr1,100.0\n")
    rc = main(["analyze", "--records", str(records), "--truths", str(truths), "--out", str(tmp_path / "o")])
    assert rc == 3
    assert not (tmp_path / "o").exists()  # no partial outputs


def test_unknown_round_exit_code(tmp_path):
    records = tmp_path / "records.csv"
    records.write_text(
        "record_id,round_id,user_id,timestamp,pre_social,post_social,confidence,shown_sample\n"
        "a,r9,u1,1,80.0,95.0,,\n"
    )
    truths = tmp_path / "truths.csv"
    truths.write_text("round_id,truth\nr1,100.0\n")
    rc = main(["analyze", "--records", str(records), "--truths", str(truths), "--out", str(tmp_path / "o")])
    assert rc == 4


def test_nonpositive_price_exit_code(tmp_path):
    records = tmp_path / "records.csv"
    records.write_text(
        "record_id,round_id,user_id,timestamp,pre_social,post_social,confidence,shown_sample\n"
        "a,r1,u1,1,-80.0,95.0,,\n"
    )
    truths = tmp_path / "truths.csv"
    truths.write_text("round_id,truth\nr1,100.0\n")
    rc = main(["analyze", "--records", str(records), "--truths", str(truths), "--out", str(tmp_path / "o")])
    assert rc == 5


def test_config_file_merges_under_flags(scenario_file, tmp_path):
    sim = tmp_path / "sim"
    main(["simulate", "--config", str(scenario_file), "--out", str(sim)])
    run_config = tmp_path / "run.json"
    run_config.write_text(
        json.dumps(
            {
                "records": str(sim / "records.csv"),
                "truths": str(sim / "truths.csv"),
                "bootstrap-count": 10,
                "alpha-grid": "-1:1:3",
                "seed": 9,
            }
        )
    )
    out = tmp_path / "run"
    rc = main(["sweep", "--config", str(run_config), "--out", str(out), "--bootstrap-count", "20"])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["parameters"]["bootstrap_count"] == 20  # flag beats config file
    assert report["meta"]["seed"] == 9  # config supplies the rest
    assert len(report["alpha_sweep"]["points"]) == 3


def test_unknown_config_key_rejected(tmp_path):
    bad = tmp_path / "run.json"
    bad.write_text(json.dumps({"bootstrap_counts": 10}))
    rc = main(["sweep", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert rc == 2


def test_env_var_default_out_dir(scenario_file, tmp_path, monkeypatch):
    monkeypatch.setenv("CROWDLAB_OUT_DIR", str(tmp_path / "from-env"))
    rc = main(["simulate", "--config", str(scenario_file)])
    assert rc == 0
    assert (tmp_path / "from-env" / "records.csv").exists()


def test_no_out_dir_is_usage_error(scenario_file, monkeypatch, capsys):
    monkeypatch.delenv("CROWDLAB_OUT_DIR", raising=False)
    rc = main(["simulate", "--config", str(scenario_file)])
    assert rc == 2
    assert "output directory" in capsys.readouterr().err


def test_parse_alpha_grid_forms():
    assert parse_alpha_grid("-1:1:3") == [-1.0, 0.0, 1.0]
    assert parse_alpha_grid("0.5") == [0.5]
    assert parse_alpha_grid("-0.3, 0.0, 0.3") == [-0.3, 0.0, 0.3]
    assert parse_alpha_grid("0:0:1") == [0.0]
    with pytest.raises(ValueError):
        parse_alpha_grid("0:1:0")


def test_dip_cache_file_reused_across_runs(scenario_file, tmp_path):
    sim = tmp_path / "sim"
    main(["simulate", "--config", str(scenario_file), "--out", str(sim)])
    cache = tmp_path / "null.json"
    args = [
        "unimodality", "--records", str(sim / "records.csv"), "--truths", str(sim / "truths.csv"),
        "--dip-mc", "150", "--dip-cache", str(cache), "--seed", "2",
    ]
    assert main([*args, "--out", str(tmp_path / "u1")]) == 0
    assert cache.exists()
    payload = json.loads(cache.read_text())
    assert payload["format"] == "crowdlab-dip-null"
    n_entries = len(payload["entries"])
    assert n_entries > 0
    assert main([*args, "--out", str(tmp_path / "u2")]) == 0
    assert len(json.loads(cache.read_text())["entries"]) == n_entries
    assert _tree(tmp_path / "u1") == _tree(tmp_path / "u2")


def test_execute_requires_matching_inputs(tmp_path):
    with pytest.raises(ValueError):
        RunConfig(command="analyze", out_dir=str(tmp_path)).validate()
    with pytest.raises(ValueError):
        execute(RunConfig(command="bogus", out_dir=str(tmp_path)))
