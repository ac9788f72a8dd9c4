#!/usr/bin/env python3
"""
Tests for the command-line front end
"""

import json

import pandas as pd
import pytest

from cli_app.main import RunConfig, main, parse_config, parse_int_set, parse_targets
from heun_core.exporters import read_json
from heun_core.reports import IndeterminacyReport


def stdout_lines(capsys):
    return [json.loads(line) for line in capsys.readouterr().out.splitlines() if line.strip()]


def test_int_sets():
    assert parse_int_set("3") == [3]
    assert parse_int_set("0-3") == [0, 1, 2, 3]
    assert parse_int_set("1,2,4") == [1, 2, 4]


def test_config_defaults():
    config = parse_config(["chaos-cert", "--p", "1-2", "--m", "1,3", "--lambda", "2+3i"])
    assert isinstance(config, RunConfig)
    assert [params.label for params in config.grid()] == ["p1_m1", "p1_m3", "p2_m1", "p2_m3"]
    assert config.lambda_values == [2 + 3j]
    assert config.window == 1000


def test_targets_parse():
    targets = parse_targets("1:1;2:2", 1)
    assert [t.offset for t in targets] == [1, 2]
    assert targets[1].coefficient(2) == 2


def test_indeterminacy_command(tmp_path, capsys):
    assert main(["indeterminacy", "--p", "1", "--m", "1", "--J", "400", "--out", str(tmp_path)]) == 0
    [summary] = stdout_lines(capsys)
    assert summary == {"params": "p1_m1", "verdict": "completely_indeterminate", "defect_numbers": [1, 1]}
    report = read_json(tmp_path / "indeterminacy_p1_m1_J400.json", IndeterminacyReport)
    assert report.verdict == "completely_indeterminate"
    norms = pd.read_csv(tmp_path / "block_norms_p1_m1_J400.csv")
    assert list(norms.columns) == ["i", "norm_sq_numerator", "norm_sq_denominator", "norm_float"]
    assert norms.loc[2, "norm_sq_numerator"] == 36


def test_indeterminacy_boundary_case(tmp_path, capsys):
    assert main(["indeterminacy", "--p", "0", "--m", "2", "--J", "200", "--out", str(tmp_path)]) == 0
    [summary] = stdout_lines(capsys)
    assert summary["verdict"] == "criterion_failed"
    assert summary["defect_numbers"] is None


def test_eigenvector_at_zero_writes_a_single_one(tmp_path, capsys):
    argv = ["eigenvector", "--p", "1", "--m", "1", "--lambda", "0", "--N", "100", "--out", str(tmp_path)]
    assert main(argv) == 0
    [summary] = stdout_lines(capsys)
    stem = summary["files"][0]
    frame = pd.read_csv(tmp_path / f"{stem}.csv")
    assert list(frame.columns) == ["n", "value_re", "value_im", "partial_norm"]
    assert len(frame) == 101
    assert frame.loc[0, "n"] == 1
    assert frame.loc[0, "value_re"] == 1
    assert (frame["value_re"].iloc[1:] == 0).all()
    assert (frame["value_im"] == 0).all()


def test_weights_csv_is_exact(tmp_path, capsys):
    assert main(["weights", "--p", "1", "--m", "1", "--N", "5", "--out", str(tmp_path)]) == 0
    frame = pd.read_csv(tmp_path / "weights_p1_m1_N5.csv")
    assert list(frame["k"]) == [1, 2, 3, 4, 5]
    assert list(frame["up_sq_numerator"]) == [2, 12, 36, 80, 150]
    assert (frame["up_sq_denominator"] == 1).all()


def test_grid_order(tmp_path, capsys):
    assert main(["weights", "--p", "0-1", "--m", "1,2", "--N", "5", "--out", str(tmp_path)]) == 0
    labels = [line["params"] for line in stdout_lines(capsys)]
    assert labels == ["p0_m1", "p0_m2", "p1_m1", "p1_m2"]


def test_repeated_runs_are_byte_identical(tmp_path, capsys):
    for name in ("a", "b"):
        out = tmp_path / name
        assert main(["periodic", "--p", "1", "--m", "1", "--s", "1", "--period", "3", "--out", str(out)]) == 0
        assert main(["bound", "--p", "1-2", "--m", "1", "--samples", "20", "--out", str(out)]) == 0
        assert main(["matrix", "--p", "1", "--m", "2", "--N", "6", "--out", str(out)]) == 0
    first = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert first == sorted(p.name for p in (tmp_path / "b").iterdir())
    for name in first:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
    lines = capsys.readouterr().out.splitlines()
    assert lines[:len(lines) // 2] == lines[len(lines) // 2:]


def test_approximant_command(tmp_path, capsys):
    argv = ["approximant", "--p", "1", "--m", "1", "--targets", "1:1;2:2", "--out", str(tmp_path)]
    assert main(argv) == 0
    [summary] = stdout_lines(capsys)
    assert len(summary["hit_times"]) == 2
    assert summary["max_error"] < 1e-6


def test_hypothesis_violation_exits_with_json(tmp_path, capsys):
    argv = ["bound", "--p", "1", "--m", "1", "--j", "1", "--error-json", "--out", str(tmp_path)]
    assert main(argv) == 1
    [error] = stdout_lines(capsys)
    assert error["type"] == "HypothesisViolationError"
    assert error["context"] == "bound"


def test_invalid_m_is_a_usage_error(tmp_path, capsys):
    assert main(["weights", "--m", "0", "--error-json", "--out", str(tmp_path)]) == 2
    [error] = stdout_lines(capsys)
    assert error["type"] == "ValidationError"
    assert error["context"] == "--m"


def test_malformed_flag_value(capsys):
    assert main(["weights", "--N", "abc", "--error-json"]) == 2
    [error] = stdout_lines(capsys)
    assert error["type"] == "CliUsageError"
    assert error["context"] == "--N"


def test_missing_subcommand(capsys):
    assert main(["--error-json"]) == 2
    [error] = stdout_lines(capsys)
    assert error["type"] == "CliUsageError"


def test_bad_target_entry(tmp_path, capsys):
    argv = ["approximant", "--targets", "1:x", "--error-json", "--out", str(tmp_path)]
    assert main(argv) == 2
    [error] = stdout_lines(capsys)
    assert error["context"] == "--targets"


@pytest.mark.parametrize("bits", ["20", "52"])
def test_precision_below_double_is_rejected(bits, capsys):
    assert main(["weights", "--precision-bits", bits, "--error-json"]) == 2
    [error] = stdout_lines(capsys)
    assert error["context"] == "--precision-bits"


def test_eigenvector_json_keeps_huge_gaps(tmp_path, capsys):
    argv = ["eigenvector", "--p", "1", "--m", "1", "--lambda", "1e4", "--N", "200", "--out", str(tmp_path)]
    assert main(argv) == 0
    [summary] = stdout_lines(capsys)
    payload = json.loads((tmp_path / f"{summary['files'][0]}.json").read_text(encoding="utf-8"))
    assert payload["cauchy_gap"] is not None
    assert float(payload["norm"]) > 1e100


def test_unknown_log_level_is_a_usage_error(capsys):
    assert main(["weights", "--log-level", "foo", "--error-json"]) == 2
    [error] = stdout_lines(capsys)
    assert error["context"] == "--log-level"
    assert error["type"] == "CliUsageError"
