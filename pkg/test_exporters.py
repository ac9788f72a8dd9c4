#!/usr/bin/env python3
"""
Tests for the CSV and JSON artifact writers
"""

from fractions import Fraction

import pandas as pd
from mpmath import mp

from heun_core.config import apply_precision
from heun_core.exporters import (
    format_real,
    read_json,
    write_json,
    write_matrix_csv,
    write_series_csv,
    write_summary_json,
)
from heun_core.indeterminacy import verdict
from heun_core.reports import IndeterminacyReport
from heun_core.weights import OperatorParams, truncated_matrix


def test_format_real():
    assert format_real(None) == ""
    assert format_real(Fraction(1, 4)) == "0.25"
    assert format_real(mp.mpf(2)) == "2"
    apply_precision(113)
    assert format_real(mp.mpf(1) / 3).startswith("0.3333333333333333333333333333333")


def test_matrix_csv_layout(tmp_path):
    params = OperatorParams(p=1, m=1)
    path = write_matrix_csv(truncated_matrix(params, 3), 1, tmp_path / "matrix.csv")
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["index", "1", "2", "3"]
    assert frame.loc[0, "2"] == frame.loc[1, "1"]
    assert abs(frame.loc[1, "3"] ** 2 - 12) < 1e-12
    assert b"\r\n" not in path.read_bytes()


def test_series_csv_running_norm(tmp_path):
    path = write_series_csv([3, 4j], tmp_path / "series.csv")
    frame = pd.read_csv(path)
    assert list(frame["n"]) == [1, 2]
    assert list(frame["value_im"]) == [0, 4]
    assert list(frame["partial_norm"]) == [3, 5]


def test_report_round_trip(tmp_path):
    report = verdict(OperatorParams(p=2, m=1), 50)
    path = write_json(report, tmp_path / "nested" / "report.json")
    assert path.read_text(encoding="utf-8").endswith("}\n")
    assert read_json(path, IndeterminacyReport) == report


def test_summary_payload(tmp_path):
    path = write_summary_json({"violations": 0, "seed": 7}, tmp_path / "sweep.json")
    assert '"violations": 0' in path.read_text(encoding="utf-8")
