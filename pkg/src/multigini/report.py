"""CSV ingestion of multivariate panels and grouped inequality reports.

The input shape is one row per unit (e.g. one company) with a group label
and d positive metric columns.  A report carries, per group and for the
pooled "All" row, the per-metric one-dimensional Gini indices, the
multivariate index with its decomposition weights, plus pooled summary
statistics and the pooled correlation matrix.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, NumericalError
from .gini import gini_1d, gini_1_decomposed, gini_p
from .sample import WeightedSample, moments

POOLED_LABEL = "All"


@dataclass(frozen=True)
class CompanyRecord:
    """One unit of observation: a name, a group label, and d metric values."""

    name: str
    group: str
    metrics: tuple


@dataclass(frozen=True)
class PanelSet:
    """Per-group samples (uniform weights) plus the pooled sample."""

    groups: dict
    pooled: WeightedSample


@dataclass(frozen=True)
class GroupRow:
    group: str
    n: int
    metric_ginis: tuple | None = None
    g1: float | None = None
    weights: tuple | None = None
    negativity_warning: bool = False
    error: str | None = None


@dataclass(frozen=True)
class InequalityReport:
    """Grouped inequality table with pooled summary and correlation."""

    p: float
    metrics: tuple
    summary_mean: tuple
    summary_std: tuple
    correlation: np.ndarray
    rows: tuple = field(default_factory=tuple)


def load_csv(path, metric_columns, group_column="group", name_column="name"):
    """Parse the panel CSV into records, dropping unusable rows.

    A row is dropped (and counted) when any metric value is missing,
    non-numeric, or non-positive; the inequality indices require positive
    data, and non-positive sizes are data errors in this domain.  Returns
    ``(records, dropped_count)``.
    """
    metric_columns = list(metric_columns)
    try:
        handle = open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for column in [name_column, group_column, *metric_columns]:
            if column not in header:
                raise DataError(f"missing column {column!r} in {path}")
        records = []
        dropped = 0
        for row in reader:
            values = []
            for column in metric_columns:
                cell = (row.get(column) or "").strip()
                try:
                    value = float(cell)
                except ValueError:
                    value = math.nan
                values.append(value)
            if any(not math.isfinite(v) or v <= 0.0 for v in values):
                dropped += 1
                continue
            records.append(
                CompanyRecord(
                    name=(row.get(name_column) or "").strip(),
                    group=(row.get(group_column) or "").strip(),
                    metrics=tuple(values),
                )
            )
    if not records:
        raise DataError(f"no usable rows in {path} ({dropped} dropped)")
    return records, dropped


def load_metric_columns(path, metric_columns):
    """Parse only the metric columns of a CSV into a matrix.

    Unlike :func:`load_csv` (the company-report path, where non-positive
    sizes are data errors), this loader keeps zeros and negative values:
    the indices are defined for any finite data with nonzero means, and
    exact fixtures legitimately place mass at zero.  Rows with missing or
    non-numeric metric values are dropped and counted.  No group or name
    columns are required.  Returns ``(matrix, dropped_count)``.
    """
    metric_columns = list(metric_columns)
    try:
        handle = open(path, "r", newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for column in metric_columns:
            if column not in header:
                raise DataError(f"missing column {column!r} in {path}")
        rows = []
        dropped = 0
        for row in reader:
            values = []
            for column in metric_columns:
                cell = (row.get(column) or "").strip()
                try:
                    value = float(cell)
                except ValueError:
                    value = math.nan
                values.append(value)
            if any(not math.isfinite(v) for v in values):
                dropped += 1
                continue
            rows.append(values)
    if not rows:
        raise DataError(f"no usable rows in {path} ({dropped} dropped)")
    return np.asarray(rows, dtype=float), dropped


def panelize(records, min_group_size: int = 2) -> PanelSet:
    """Group records into per-group samples plus the pooled sample.

    Groups smaller than ``min_group_size`` are excluded from the per-group
    map but still contribute to the pooled sample.
    """
    if min_group_size < 2:
        raise DataError(f"min_group_size must be >= 2, got {min_group_size}")
    by_group: dict[str, list] = {}
    pooled = []
    for record in records:
        by_group.setdefault(record.group, []).append(record.metrics)
        pooled.append(record.metrics)
    groups = {
        name: WeightedSample(np.asarray(rows, dtype=float))
        for name, rows in sorted(by_group.items())
        if len(rows) >= min_group_size
    }
    return PanelSet(groups=groups, pooled=WeightedSample(np.asarray(pooled, dtype=float)))


def _row_for_sample(label: str, sample: WeightedSample, p: float) -> GroupRow:
    # one degenerate group must not kill the whole report: each part that
    # fails turns into an error note, the rest is kept
    metric_ginis = None
    g1 = None
    weights = None
    negativity = False
    notes = []
    try:
        metric_ginis = tuple(
            float(gini_1d(sample.points[:, j], sample.weights)) for j in range(sample.dim)
        )
    except NumericalError as exc:
        notes.append(str(exc))
    try:
        if p == 1.0:
            result = gini_1_decomposed(sample)
            weights = tuple(float(v) for v in result.weights)
        else:
            result = gini_p(sample, p)
        g1 = result.value
        negativity = result.negativity_warning
    except NumericalError as exc:
        notes.append(str(exc))
    return GroupRow(
        group=label,
        n=sample.n,
        metric_ginis=metric_ginis,
        g1=g1,
        weights=weights,
        negativity_warning=negativity,
        error="; ".join(notes) or None,
    )


def build_report(panels: PanelSet, p: float = 1.0, metric_names=None) -> InequalityReport:
    """Per-group inequality rows plus pooled summary statistics.

    Rows are ordered by group name with the pooled row last.  Groups whose
    covariance is singular get an error note instead of aborting.
    """
    if panels.pooled is None:
        raise DataError("empty panel set")
    pooled_moments = moments(panels.pooled)
    dim = panels.pooled.dim
    if metric_names is None:
        metric_names = [f"metric{j}" for j in range(dim)]
    metric_names = tuple(str(name) for name in metric_names)
    if len(metric_names) != dim:
        raise DataError(f"expected {dim} metric names, got {len(metric_names)}")
    rows = [
        _row_for_sample(name, sample, p)
        for name, sample in sorted(panels.groups.items())
    ]
    rows.append(_row_for_sample(POOLED_LABEL, panels.pooled, p))
    return InequalityReport(
        p=p,
        metrics=metric_names,
        summary_mean=tuple(float(v) for v in pooled_moments.mean),
        summary_std=tuple(float(math.sqrt(v)) for v in pooled_moments.variances),
        correlation=pooled_moments.correlation,
        rows=tuple(rows),
    )


def _nan_to_none(value):
    if value is None:
        return None
    value = float(value)
    return value if math.isfinite(value) else None


def report_to_dict(report: InequalityReport) -> dict:
    """JSON-friendly dict with a stable key order (documented in docs/report-schema.md).

    The max-norm order serializes as the string "inf".
    """
    return {
        "p": report.p if math.isfinite(report.p) else "inf",
        "metrics": list(report.metrics),
        "summary": {
            name: {"mean": report.summary_mean[j], "std": report.summary_std[j]}
            for j, name in enumerate(report.metrics)
        },
        "correlation": [[_nan_to_none(v) for v in row] for row in report.correlation],
        "rows": [
            {
                "group": row.group,
                "n": row.n,
                "gini": (
                    None
                    if row.metric_ginis is None
                    else {name: row.metric_ginis[j] for j, name in enumerate(report.metrics)}
                ),
                "g1": row.g1,
                "weights": (
                    None
                    if row.weights is None
                    else {name: row.weights[j] for j, name in enumerate(report.metrics)}
                ),
                "negativity_warning": row.negativity_warning,
                "error": row.error,
            }
            for row in report.rows
        ],
    }


def _format_table(report: InequalityReport) -> str:
    metrics = report.metrics
    lines = ["Summary statistics (pooled)"]
    name_width = max(len("metric"), *(len(m) for m in metrics))
    lines.append(f"{'metric':<{name_width}}  {'mean':>12}  {'std':>12}")
    for j, name in enumerate(metrics):
        lines.append(
            f"{name:<{name_width}}  {report.summary_mean[j]:>12.3e}  {report.summary_std[j]:>12.3e}"
        )
    lines.append("")
    lines.append("Correlation matrix (pooled)")
    lines.append(f"{'':<{name_width}}  " + "  ".join(f"{m:>8}" for m in metrics))
    for j, name in enumerate(metrics):
        cells = "  ".join(
            f"{v:>8.3f}" if math.isfinite(v) else f"{'nan':>8}" for v in report.correlation[j]
        )
        lines.append(f"{name:<{name_width}}  {cells}")
    lines.append("")
    lines.append("Inequality by group")
    group_width = max(len("group"), *(len(r.group) for r in report.rows))
    head = [f"{'group':<{group_width}}", f"{'n':>6}"]
    head += [f"{'gini_' + m:>{max(10, len(m) + 5)}}" for m in metrics]
    head.append(f"{'g1':>8}")
    head += [f"{'w_' + m:>{max(8, len(m) + 2)}}" for m in metrics]
    head.append("note")
    lines.append("  ".join(head))
    for row in report.rows:
        cells = [f"{row.group:<{group_width}}", f"{row.n:>6}"]
        for j, name in enumerate(metrics):
            width = max(10, len(name) + 5)
            value = None if row.metric_ginis is None else row.metric_ginis[j]
            cells.append(f"{value:>{width}.3f}" if value is not None else f"{'-':>{width}}")
        cells.append(f"{row.g1:>8.3f}" if row.g1 is not None else f"{'-':>8}")
        for j, name in enumerate(metrics):
            width = max(8, len(name) + 2)
            value = None if row.weights is None else row.weights[j]
            cells.append(f"{value:>{width}.3f}" if value is not None else f"{'-':>{width}}")
        note = row.error or ("negativity" if row.negativity_warning else "")
        cells.append(note)
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


def _format_csv(report: InequalityReport) -> str:
    metrics = report.metrics
    out = []
    header = (
        ["group", "n"]
        + [f"gini_{m}" for m in metrics]
        + ["g1"]
        + [f"weight_{m}" for m in metrics]
        + ["negativity_warning", "error"]
    )
    out.append(",".join(header))
    for row in report.rows:
        cells = [row.group, str(row.n)]
        for j in range(len(metrics)):
            cells.append("" if row.metric_ginis is None else repr(row.metric_ginis[j]))
        cells.append("" if row.g1 is None else repr(row.g1))
        for j in range(len(metrics)):
            cells.append("" if row.weights is None else repr(row.weights[j]))
        cells.append("true" if row.negativity_warning else "false")
        cells.append(row.error or "")
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


def serialize_report(report: InequalityReport, format: str = "table") -> str:
    """Render a report as a fixed-width table, CSV rows, or JSON.

    Table mode prints 3 decimals; csv and json carry full precision and are
    byte-deterministic for identical inputs.
    """
    if format == "table":
        return _format_table(report)
    if format == "csv":
        return _format_csv(report)
    if format == "json":
        return json.dumps(report_to_dict(report), indent=2, allow_nan=False) + "\n"
    raise DataError(f"unknown report format {format!r}; choose table, csv or json")
