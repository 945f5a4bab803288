"""Experiment harness, serialization, CLI, and walkthrough output."""

import json

import pytest

from coded_rebalance import ConfigError, ExperimentConfig, emit_results, run_experiment
from coded_rebalance.cli import format_walkthrough, main


def remove_config(**overrides):
    base = dict(
        num_nodes=6, replication=3, event="remove", removed_node=6,
        num_bits=20000, trials=4, master_seed=5,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def test_identical_configs_identical_json_bytes():
    a = emit_results(run_experiment(remove_config()))
    b = emit_results(run_experiment(remove_config()))
    assert a.encode() == b.encode()


def test_single_trial_run_is_byte_reproducible():
    a = emit_results(run_experiment(remove_config(trials=1)))
    b = emit_results(run_experiment(remove_config(trials=1)))
    assert a.encode() == b.encode()


def test_different_seed_changes_results():
    a = emit_results(run_experiment(remove_config()))
    b = emit_results(run_experiment(remove_config(master_seed=6)))
    assert a != b


def test_json_schema_and_summary():
    doc = json.loads(emit_results(run_experiment(remove_config())))
    assert doc["config"]["nodes"] == 6
    assert doc["config"]["event"] == "remove"
    assert len(doc["trials"]) == 4
    for row in doc["trials"]:
        assert set(row) >= {
            "trial", "seed", "total_bits", "num_codewords", "load",
            "realized_load", "max_rel_err", "storage_before", "storage_after",
        }
        assert row["replication_exact"] is True
    assert doc["summary"]["theoretical_asymptote"] == 0.5
    assert doc["summary"]["bound"] > 0.5
    assert "max_rel_err" in doc["summary"]["uniformity"]


def test_csv_rows_and_per_row_floor():
    result = run_experiment(remove_config(trials=6))
    lines = emit_results(result, "csv").strip().splitlines()
    header, rows = lines[0], lines[1:]
    assert header == "trial,seed,total_bits,num_codewords,load,realized_load,max_rel_err"
    assert len(rows) == 6
    for row in rows:
        realized_load = float(row.split(",")[5])
        assert realized_load >= 0.5  # converse floor, exact per run


def test_addition_summary_asymptote():
    config = ExperimentConfig(
        num_nodes=4, replication=2, event="add", num_bits=20000, trials=3, master_seed=2
    )
    doc = json.loads(emit_results(run_experiment(config)))
    assert doc["summary"]["theoretical_asymptote"] == 1.0
    assert doc["summary"]["bound"] is None


def test_trials_default_by_event():
    assert remove_config(trials=None).trials == 30
    add = ExperimentConfig(num_nodes=4, replication=2, event="add")
    assert add.trials == 100


@pytest.mark.parametrize(
    "overrides",
    [
        dict(replication=1),
        dict(replication=6),
        dict(removed_node=None),
        dict(removed_node=9),
        dict(trials=0),
        dict(num_bits=0),
        dict(master_seed=-1),
        dict(event="join"),
        dict(output_format="xml"),
    ],
)
def test_config_validation_rejects(overrides):
    with pytest.raises(ConfigError):
        remove_config(**overrides).validate()


def test_walkthrough_removal_schedule():
    text = format_walkthrough(remove_config(num_bits=120, trials=1))
    lines = text.splitlines()
    schedule = [ln for ln in lines if ln.startswith("tx ")]
    assert len(schedule) == 30
    (line,) = [ln for ln in schedule if "sender=5 group={2,3}" in ln]
    assert "->1" in line and "->4" in line


def test_walkthrough_addition_schedule():
    config = ExperimentConfig(
        num_nodes=4, replication=2, event="add", num_bits=60, trials=1, master_seed=3
    )
    text = format_walkthrough(config)
    schedule = [ln for ln in text.splitlines() if ln.startswith("tx ") and "sender=1" in ln]
    assert sorted(ln.split("class=")[1].split(" ")[0] for ln in schedule) == [
        "{2,3}", "{2,4}", "{3,4}",
    ]
    assert all("-> node 5" in ln for ln in schedule)


def test_cli_writes_json_file(tmp_path, capsys):
    out = tmp_path / "result.json"
    code = main([
        "--nodes", "6", "--replication", "3", "--event", "remove:6",
        "--bits", "5000", "--trials", "2", "--seed", "4", "--out", str(out),
    ])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["config"]["removed_node"] == 6
    assert len(doc["trials"]) == 2


def test_cli_stdout_and_csv(capsys):
    code = main([
        "--nodes", "4", "--replication", "2", "--event", "add",
        "--bits", "2000", "--trials", "2", "--format", "csv",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0].startswith("trial,seed,")
    assert len(out.strip().splitlines()) == 3


def test_cli_rejects_bad_event(capsys):
    code = main(["--nodes", "6", "--replication", "3", "--event", "drop:6"])
    assert code == 2
    assert "invalid configuration" in capsys.readouterr().err


def test_cli_rejects_bad_replication(capsys):
    code = main(["--nodes", "6", "--replication", "6", "--event", "remove:6"])
    assert code == 2


def test_cli_walkthrough_roundtrip(capsys):
    code = main([
        "--nodes", "6", "--replication", "3", "--event", "remove:6",
        "--bits", "120", "--seed", "7", "--walkthrough",
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert out.count("\ntx ") == 30 and out.startswith("walkthrough:")
