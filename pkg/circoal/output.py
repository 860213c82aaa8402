"""
CSV and JSON rendering of experiment results.

Files are rendered completely in memory before anything is written, and nothing that varies
between runs (timestamps, host names) is included, so a fixed seed gives byte-identical files.
"""

# pylint: disable=logging-fstring-interpolation

import csv
import io
import json
from dataclasses import asdict
from pathlib import Path
from typing import Any, Literal, Optional

import numpy as np

from circoal.logger import logger
from circoal.models import ExperimentResult, TestReport

OutputFormat = Literal["csv", "json"]


def plain(value: Any) -> Any:
    """Convert numpy scalars and tuples into JSON-friendly Python values"""
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [plain(item) for item in value]
    if isinstance(value, dict):
        return {str(key): plain(item) for key, item in value.items()}
    return value


def _cell(value: Any) -> str:
    value = plain(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ";".join(_cell(item) for item in value)
    return str(value)


def render_csv(rows: list[dict[str, Any]], header: dict[str, Any]) -> str:
    """Comment block with the configuration, then a header row and one line per row"""
    buffer = io.StringIO()
    for key, value in header.items():
        buffer.write(f"# {key}: {_cell(value)}\n")
    fieldnames: list[str] = []
    for row in rows:
        fieldnames.extend(key for key in row if key not in fieldnames)
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: _cell(value) for key, value in row.items()})
    return buffer.getvalue()


def report_rows(result: ExperimentResult) -> list[dict[str, Any]]:
    """One row per statistical report"""
    return [asdict(report) for report in result.reports]


def _report_comment(report: TestReport) -> str:
    fields = "; ".join(f"{key}={_cell(value)}" for key, value in asdict(report).items())
    return f"# report: {fields}\n"


def render_json(result: ExperimentResult) -> str:
    """Single object holding config, rows, reports and extra tables"""
    document = {
        "config": result.config.as_dict(),
        "rows": result.rows,
        "reports": report_rows(result),
        "tables": result.tables,
    }
    return json.dumps(plain(document), indent=2, sort_keys=True) + "\n"


def render(
    result: ExperimentResult, out: Optional[Path], fmt: OutputFormat
) -> dict[Optional[Path], str]:
    """File contents keyed by path; the key None stands for standard output, where the
    reports follow the CSV table as comment lines
    """
    if fmt == "json":
        return {out: render_json(result)}
    header = result.config.as_dict()
    files: dict[Optional[Path], str] = {out: render_csv(result.rows, header)}
    if out is None:
        files[None] += "".join(_report_comment(report) for report in result.reports)
        return files
    tables = {"reports": report_rows(result), **result.tables}
    for name, rows in tables.items():
        if rows:
            path = out.with_name(f"{out.stem}_{name}{out.suffix or '.csv'}")
            files[path] = render_csv(rows, header)
    return files


def write_result(
    result: ExperimentResult, out: Optional[Path], fmt: OutputFormat = "csv"
) -> None:
    """Render everything first, then write the files (or print to stdout when out is None)"""
    files = render(result, out, fmt)
    for path, content in files.items():
        if path is None:
            print(content, end="")
            continue
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content, encoding="utf-8")
        logger.info(f"Wrote {path}")
