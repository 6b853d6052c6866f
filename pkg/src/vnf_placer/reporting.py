"""CSV emission and aggregation for solver runs.

The canonical row schema is fixed so reruns with identical flags produce
byte-identical files except for the wall-time column. Infinite costs are
written as the string "inf".
"""

from __future__ import annotations

import csv
import json
import math
import statistics
from pathlib import Path

from .results import RunResult

CSV_COLUMNS = [
    "instance_id",
    "algo",
    "seed",
    "trial",
    "cost",
    "fail_rate",
    "time_ms",
    "r",
    "row_update",
]

RATIO_COLUMNS = ["instance_id", "dp_cost", "lv_mean_cost", "ratio"]


class SummaryError(ValueError):
    """Malformed or empty CSV input to summarize."""


def format_cost(value: float) -> str:
    return "inf" if math.isinf(value) else repr(float(value))


def result_to_row(res: RunResult) -> dict[str, str]:
    return {
        "instance_id": res.instance_id,
        "algo": res.algo,
        "seed": "" if res.seed is None else str(res.seed),
        "trial": str(res.trial),
        "cost": format_cost(res.total_cost),
        "fail_rate": repr(float(res.fail_rate)),
        "time_ms": repr(float(res.wall_time_ms)),
        "r": "" if res.r is None else str(res.r),
        "row_update": "" if res.row_update is None else ("true" if res.row_update else "false"),
    }


def write_rows(path, rows: list[dict[str, str]], columns: list[str] | None = None) -> None:
    columns = columns or CSV_COLUMNS
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def write_results(path, results: list[RunResult]) -> None:
    write_rows(path, [result_to_row(r) for r in results])


def dump_allocations(path, results: list[RunResult]) -> None:
    """JSON dump from which every CSV row's cost can be re-derived."""
    payload = {
        "results": [
            {
                "instance_id": r.instance_id,
                "algo": r.algo,
                "seed": r.seed,
                "trial": r.trial,
                "total_cost": None if math.isinf(r.total_cost) else r.total_cost,
                "total_cost_inf": math.isinf(r.total_cost),
                "labels": r.labels,
                "allocations": [sorted(a.items()) for a in r.allocations],
            }
            for r in results
        ]
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def _parse_float(text: str, where: str) -> float:
    if text == "inf":
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise SummaryError(f"{where}: not a number: {text!r}") from None


def read_rows(path) -> list[dict[str, str]]:
    """Read a CSV written by this package, reporting bad lines by number."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SummaryError(f"{path}: empty file") from None
        if header not in (CSV_COLUMNS, RATIO_COLUMNS):
            raise SummaryError(f"{path}: line 1: unrecognized header {header}")
        rows = []
        for lineno, values in enumerate(reader, start=2):
            if len(values) != len(header):
                raise SummaryError(
                    f"{path}: line {lineno}: expected {len(header)} fields, got {len(values)}"
                )
            rows.append(dict(zip(header, values)))
    return rows


def _stats(values: list[float]) -> dict[str, float]:
    return {
        "mean": statistics.fmean(values),
        "min": min(values),
        "max": max(values),
        "stddev": statistics.pstdev(values),
    }


def summarize(paths) -> list[dict]:
    """Aggregate canonical and ratio CSVs into per-group statistics.

    Canonical rows group by (algo, r, row_update); ratio files form their
    own "ratio" group. Raises SummaryError on empty input or bad rows.
    """
    groups: dict[tuple, dict[str, list[float]]] = {}
    for path in paths:
        rows = read_rows(path)
        if not rows:
            raise SummaryError(f"{path}: no data rows")
        for lineno, row in enumerate(rows, start=2):
            where = f"{path}: line {lineno}"
            if "ratio" in row:
                key = ("ratio",)
                metrics = {
                    "ratio": _parse_float(row["ratio"], where),
                    "dp_cost": _parse_float(row["dp_cost"], where),
                    "lv_mean_cost": _parse_float(row["lv_mean_cost"], where),
                }
            else:
                key = (row["algo"], row["r"], row["row_update"])
                metrics = {
                    "cost": _parse_float(row["cost"], where),
                    "fail_rate": _parse_float(row["fail_rate"], where),
                    "time_ms": _parse_float(row["time_ms"], where),
                }
            bucket = groups.setdefault(key, {})
            for name, value in metrics.items():
                bucket.setdefault(name, []).append(value)

    out = []
    for key in sorted(groups, key=str):
        bucket = groups[key]
        entry: dict = {"group": "/".join(str(k) for k in key if k != "")}
        entry["rows"] = len(next(iter(bucket.values())))
        for name in sorted(bucket):
            for stat, value in _stats(bucket[name]).items():
                entry[f"{name}_{stat}"] = value
        out.append(entry)
    return out


def format_summary(entries: list[dict]) -> str:
    """Plain-text table, one line per group."""
    lines = []
    for e in entries:
        parts = [f"{e['group']} (rows={e['rows']})"]
        for key in sorted(e):
            if key in ("group", "rows"):
                continue
            value = e[key]
            parts.append(f"{key}={value:.6g}")
        lines.append("  ".join(parts))
    return "\n".join(lines)
