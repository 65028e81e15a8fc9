"""Serialization of experiment reports to CSV or JSON.

CSV output is the row table only ('.' decimals, comma delimiter, LF line
endings, UTF-8, floats in round-trip-exact form); JSON carries the whole
report. When a report declares plot columns and the destination is a path,
a plot-ready companion file ``<stem>.plot.csv`` is written as well.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from .experiments import ExperimentReport


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer, int)) and not isinstance(value, bool):
        return int(value)
    if isinstance(value, (np.floating, float)):
        f = float(value)
        return None if math.isnan(f) or math.isinf(f) else f
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    return value


def report_to_csv(report: ExperimentReport, columns: tuple[str, ...] | None = None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    cols = columns or report.columns
    writer.writerow(cols)
    for row in report.rows:
        writer.writerow([_cell(row.get(c)) for c in cols])
    return buf.getvalue()


def report_to_json(report: ExperimentReport) -> str:
    payload = {
        "name": report.name,
        "params": _jsonable(report.params),
        "columns": list(report.columns),
        "rows": _jsonable(report.rows),
        "summary": _jsonable(report.summary),
    }
    return json.dumps(payload, indent=2) + "\n"


def emit_report(report: ExperimentReport, fmt: str = "csv", destination=None) -> None:
    """Write a report as ``csv`` or ``json`` to a path (or stdout if None),
    plus the plot-data companion file when applicable."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
    text = report_to_csv(report) if fmt == "csv" else report_to_json(report)
    if destination is None:
        sys.stdout.write(text)
        return
    path = Path(destination)
    path.write_text(text, encoding="utf-8")
    if report.plot_columns:
        plot = report_to_csv(report, columns=report.plot_columns)
        path.with_suffix(".plot.csv").write_text(plot, encoding="utf-8")
