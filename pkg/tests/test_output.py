"""Tests for CSV and JSON rendering"""

import json
from pathlib import Path

import numpy as np

from circoal.models import ExperimentConfig, ExperimentResult, TestReport
from circoal.output import plain, render, render_csv, render_json, write_result


def example_result():
    """Small result with one extra table"""
    config = ExperimentConfig(
        command="coalesce-time", params={"gaps": [0.5, 0.5]}, seed=3, version="0.1.0"
    )
    rows = [{"quantity": "mean", "empirical": np.float64(0.125), "n": np.int64(10)}]
    reports = [TestReport.check(0.001, 0.003, "mean T_m")]
    return ExperimentResult(config, rows, reports, {"refinement": [{"dt": 1e-3, "mean": 0.126}]})


def test_plain():
    """numpy scalars and tuples become plain Python values"""
    assert plain({"a": (np.float64(0.5), np.int64(2))}) == {"a": [0.5, 2]}
    assert isinstance(plain(np.bool_(True)), bool)


def test_render_csv():
    """Configuration comment lines, a header and one line per row"""
    text = render_csv([{"a": 1, "b": [0.25, 0.75]}, {"a": 2, "c": "x"}], {"command": "test"})

    assert text.splitlines() == [
        "# command: test",
        "a,b,c",
        "1,0.25;0.75,",
        "2,,x",
    ]


def test_render_to_stdout():
    """Without an output path the main table and its reports form one document"""
    files = render(example_result(), None, "csv")

    assert list(files) == [None]
    assert "# gaps: 0.5;0.5" in files[None]
    assert "mean,0.125,10" in files[None]
    assert files[None].splitlines()[-1] == (
        "# report: statistic=0.001; threshold=0.003; passed=True; description=mean T_m; "
        "advisory=False; comparison=at_most"
    )


def test_render_files():
    """Reports and extra tables go next to the main file"""
    out = Path("results") / "run.csv"
    files = render(example_result(), out, "csv")

    assert set(files) == {
        out,
        Path("results") / "run_reports.csv",
        Path("results") / "run_refinement.csv",
    }
    assert "mean T_m" in files[Path("results") / "run_reports.csv"]


def test_render_json():
    """A single document holds everything"""
    document = json.loads(render_json(example_result()))

    assert document["config"]["command"] == "coalesce-time"
    assert document["rows"][0]["empirical"] == 0.125
    assert document["reports"][0]["passed"] is True
    assert document["tables"]["refinement"][0]["dt"] == 1e-3


def test_write_result_is_deterministic(tmp_path):
    """Writing the same result twice gives identical files"""
    out = tmp_path / "nested" / "run.csv"
    write_result(example_result(), out, "csv")
    first = out.read_text(encoding="utf-8")
    write_result(example_result(), out, "csv")

    assert out.read_text(encoding="utf-8") == first
    assert (tmp_path / "nested" / "run_reports.csv").exists()


def test_write_result_to_stdout(capsys):
    """Without a path the table is printed"""
    write_result(example_result(), None, "json")

    assert json.loads(capsys.readouterr().out)["config"]["seed"] == 3
