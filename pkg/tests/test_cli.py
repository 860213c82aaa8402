"""Tests for the command-line interface"""

import csv
import json
import logging

import pytest

from circoal.cli import build_parser, duality_points, float_list, main
from circoal.constants import SEED_ENV_VAR

SMOKE = ["--reps", "200", "--dt", "1e-2", "--threads", "1"]


@pytest.fixture(autouse=True)
def no_seed_env(monkeypatch):
    """Runs do not pick up a seed from the calling shell"""
    monkeypatch.delenv(SEED_ENV_VAR, raising=False)


@pytest.mark.parametrize(
    "argv,message",
    [
        (["coalesce-time", "--gaps", "0.5,0.6"], "gaps must sum to 1"),
        (["coalesce-time", "--m", "1"], "at least two particles"),
        (["coalesce-time", "--m", "2", "--gaps", "0.5,0.5"], "exactly one of --gaps and --m"),
        (["coalesce-time", "--m", "2", "--reps", "1"], "reps must be at least 2"),
        (["coalesce-time", "--m", "2", "--lambdas", "0,1"], "lambdas must be positive"),
        (["coalesce-time", "--m", "2", "--seed", "-1"], "Seeds must be non-negative"),
        (["fixation", "--eps", "0"], "eps must be positive"),
        (["fixation", "--sampler", "beta"], "unknown sampler"),
        (["arratia", "--grid-size", "1"], "grid size must be at least 2"),
        (["duality", "--m", "4", "--n", "4"], "m * n must be at most 12"),
        (["spacing-scan", "--m", "3", "--grid-density", "2"], "grid density must be at least"),
        (["coalesce-time", "--m", "2", "--threads", "0"], "threads must be at least 1"),
        (["spacing-scan", "--threads", "-2"], "threads must be at least 1"),
        (["spacing-scan", "--m", "6", "--grid-density", "200"], "exceed the scan limit"),
    ],
)
def test_invalid_configuration(tmp_path, caplog, argv, message):
    """Invalid configurations exit with code 2 before anything is written"""
    caplog.set_level(logging.INFO)
    out = tmp_path / "result.csv"

    assert main([*argv, "--out", str(out)]) == 2
    assert message in caplog.text
    assert not out.exists()


def test_float_list():
    """Comma-separated numbers"""
    assert float_list("0.2, 0.3,0.5") == (0.2, 0.3, 0.5)
    with pytest.raises(SystemExit):
        build_parser().parse_args(["coalesce-time", "--gaps", "a,b"])


def test_duality_points():
    """Particles at i/m and a shifted fence"""
    particles, fence = duality_points(2, 2)

    assert particles == [0.0, 0.5]
    assert fence == pytest.approx([0.3, 0.8])


def test_spacing_scan(tmp_path):
    """The scan writes its table and never gates the exit code"""
    out = tmp_path / "scan.csv"

    assert main(["spacing-scan", "--m", "2", "--grid-density", "10", "--out", str(out)]) == 0
    lines = out.read_text(encoding="utf-8").splitlines()
    assert "# command: spacing-scan" in lines
    table = [line for line in lines if not line.startswith("#")]
    assert table[0].startswith("gaps,mean,cdf_0.05,argmin_0.05")
    assert len(table) == 10
    assert any(line.startswith("0.5;0.5,0.125,") for line in table)
    assert (tmp_path / "scan_reports.csv").exists()


def test_low_power_coalesce_time(tmp_path, caplog):
    """Small runs only give advisory reports and say so"""
    caplog.set_level(logging.INFO)
    out = tmp_path / "coalesce.json"

    code = main(
        ["coalesce-time", "--gaps", "0.3,0.7", *SMOKE, "--format", "json", "--out", str(out)]
    )

    assert code == 0
    assert "LOW-POWER" in caplog.text
    document = json.loads(out.read_text(encoding="utf-8"))
    assert document["config"]["gaps"] == [0.3, 0.7]
    assert {row["quantity"] for row in document["rows"]} == {"laplace", "mean", "winner_frequency"}
    assert all(report["advisory"] for report in document["reports"])


def test_seed_makes_runs_reproducible(tmp_path):
    """The same seed writes the same file"""
    first, second = tmp_path / "first.csv", tmp_path / "second.csv"
    for out in (first, second):
        assert main(["coalesce-time", "--m", "3", *SMOKE, "--seed", "5", "--out", str(out)]) == 0

    assert first.read_text(encoding="utf-8") == second.read_text(encoding="utf-8")


@pytest.mark.parametrize(
    "extra,tables",
    [
        ([], ["kappa_histogram", "prevailing", "samples"]),
        (["--atomic-gaps", "0.2,0.3,0.5"], ["lower_bound", "samples"]),
    ],
)
def test_fixation(tmp_path, extra, tables):
    """Diffuse and atomic fixation runs write their tables"""
    out = tmp_path / "fixation.csv"
    argv = ["fixation", "--grid-size", "16", "--eps", "0.01", *SMOKE, *extra, "--out", str(out)]

    assert main(argv) == 0
    for name in tables:
        assert (tmp_path / f"fixation_{name}.csv").exists()


def test_arratia(tmp_path):
    """Cluster counts and the avoidance table"""
    out = tmp_path / "arratia.csv"

    assert main(["arratia", "--t-list", "0.1", "--grid-size", "16", *SMOKE, "--out", str(out)]) == 0
    text = out.read_text(encoding="utf-8")
    assert "mean_cluster_count,0.1," in text
    assert (tmp_path / "arratia_avoidance.csv").exists()


def test_duality_single_cell(tmp_path):
    """With one particle and one fence point both arrays are always [[1]]"""
    out = tmp_path / "duality.json"
    argv = ["duality", "--m", "1", "--n", "1", "--t", "0.05", *SMOKE, "--format", "json"]
    code = main([*argv, "--out", str(out)])

    assert code == 0
    document = json.loads(out.read_text(encoding="utf-8"))
    assert document["rows"] == [{"array": "1", "backward": 1.0, "cell": 1, "forward": 1.0}]
    assert document["reports"][0]["statistic"] == 0.0
    assert len(document["tables"]["moment_duality"]) == 4


def test_log_level(tmp_path, caplog):
    """With --log-level WARNING the start of a run is not logged"""
    caplog.set_level(logging.DEBUG)
    out = tmp_path / "scan.csv"

    assert main(["spacing-scan", "--m", "2", "--log-level", "WARNING", "--out", str(out)]) == 0
    assert "Running spacing-scan" not in caplog.text
    main(["spacing-scan", "--m", "2", "--out", str(out)])
    assert "Running spacing-scan" in caplog.text


def test_document_on_stdout(capsys):
    """Without --out stdout holds only the CSV document and progress goes to stderr"""
    argv = ["spacing-scan", "--m", "2", "--seed", "1"]

    assert main(argv) == 0
    first = capsys.readouterr()
    assert main(argv) == 0
    second = capsys.readouterr()

    assert first.out == second.out
    assert " - INFO - " not in first.out
    assert "Running spacing-scan" in first.err
    lines = first.out.splitlines()
    rows = list(csv.DictReader(line for line in lines if not line.startswith("#")))
    assert len(rows) == 9
    assert [float(row["mean"]) for row in rows][4] == 0.125
    assert lines[-1].startswith("# report: statistic=")


def test_equal_flag_removed():
    """--m already places particles equally spaced, so there is no separate --equal switch"""
    with pytest.raises(SystemExit):
        build_parser().parse_args(["coalesce-time", "--m", "3", "--equal"])
    assert build_parser().parse_args(["coalesce-time", "--m", "3"]).m == 3
