"""Render sweep/compare CSV tables as line charts with error bars.

The renderer is deliberately dumb: it draws exactly the numbers in the
file, one curve per group label, and never recomputes a statistic. Bars
span +/- 2 times the value in the error column.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  backend pinned above

FIGSIZE = (6.4, 4.8)
DPI = 100
# tab10 hex values, assigned to group labels in sorted order so a rerun on
# the same table picks the same colors
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


class DataError(ValueError):
    """The input table cannot be plotted; the message says why."""


@dataclass(frozen=True)
class PlotJob:
    """One chart: where the table lives, which columns to use, where to write."""

    source: str | Path
    x: str
    group: str
    y: str
    err: str
    out: str | Path
    logy: bool = False


@dataclass(frozen=True)
class Series:
    label: str
    x: tuple[float, ...]
    y: tuple[float, ...]
    err: tuple[float, ...]


def load_series(job: PlotJob) -> list[Series]:
    """Split the CSV into one series per group label.

    Series come back sorted by label; points within a series stay in file
    order. Raises DataError when the table is empty, a referenced column is
    missing from the header, or a cell fails to parse as a number.
    """
    with open(job.source, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        rows = list(reader)
    if not header or not rows:
        raise DataError(f"{job.source} has no data rows")
    for column in (job.x, job.group, job.y, job.err):
        if column not in header:
            raise DataError(f"column {column!r} not in header {header}")
    groups: dict[str, list[tuple[float, float, float]]] = {}
    for lineno, row in enumerate(rows, start=2):
        label = row[job.group]
        try:
            point = (float(row[job.x]), float(row[job.y]), float(row[job.err]))
        except (TypeError, ValueError):
            raise DataError(f"line {lineno}: non-numeric cell in one of "
                            f"{job.x!r}, {job.y!r}, {job.err!r}") from None
        groups.setdefault(label, []).append(point)
    series = []
    for label in sorted(groups):
        xs, ys, errs = zip(*groups[label])
        series.append(Series(label, xs, ys, errs))
    return series


def render(job: PlotJob):
    """Draw the chart and write it to job.out; returns the open figure.

    One errorbar curve per group label, legend text taken verbatim from the
    group column. The caller owns closing the figure.
    """
    series = load_series(job)
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    for idx, s in enumerate(series):
        ax.errorbar(
            s.x, s.y, yerr=[2.0 * e for e in s.err],
            label=s.label, color=PALETTE[idx % len(PALETTE)],
            marker="o", capsize=3,
        )
    ax.set_xlabel(job.x)
    ax.set_ylabel(job.y)
    if job.logy:
        ax.set_yscale("log")
    ax.legend()
    fig.savefig(job.out)
    return fig
