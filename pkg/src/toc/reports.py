"""Benchmark byte accounting, report writing, and figure rendering.

Reports are flat (metric, value, units) triples so every command emits
the same schema; they serialize to CSV or JSON with a stable column
order.  When a report is written to a file, a matplotlib rendering of
the same numbers lands next to it as a PNG, so a benchmark run leaves
both a diffable artifact and something a human can glance at.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .codec import LogicalEncoding
from .matrix import SparseRowMatrix
from .physical import serialize_block

REPORT_FORMATS = ("csv", "json")


@dataclass
class ReportRow:
    metric: str
    value: float
    units: str


def dense_bytes(n_rows: int, n_cols: int) -> int:
    """The densified matrix at 8 bytes per cell."""
    return 8 * n_rows * n_cols


def csr_bytes(s: SparseRowMatrix) -> int:
    """Classical sparse-row baseline: f64 value + u32 column per entry, u32 row pointers."""
    return 12 * s.nnz + 4 * (s.n_rows + 1)


def logical_bytes(enc: LogicalEncoding) -> int:
    """Compressed size before bit packing: u32 codes and columns, f64 pair values."""
    return 12 * len(enc.pairs) + 4 * enc.total_codes + 4 * (enc.n_rows + 1)


def physical_bytes(enc: LogicalEncoding) -> int:
    """Actual on-disk block size, bit packing and value index included."""
    return len(serialize_block(enc))


def format_report(rows: list[ReportRow], fmt: str = "csv") -> str:
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"report format must be one of {REPORT_FORMATS}, got {fmt!r}")
    if fmt == "json":
        return json.dumps([asdict(r) for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["metric", "value", "units"])
    for r in rows:
        writer.writerow([r.metric, r.value, r.units])
    return buf.getvalue()


def write_report(rows: list[ReportRow], path: str | Path, fmt: str = "csv") -> None:
    Path(path).write_text(format_report(rows, fmt), encoding="utf-8")


def _new_axes(title: str, xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(6.4, 4.0), dpi=110)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _save(fig, path: str | Path) -> None:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_ratio_figure(
    batch_sizes: list[int],
    dense_over_toc: list[float],
    csr_over_toc: list[float],
    path: str | Path,
) -> None:
    fig, ax = _new_axes("Compression ratios by batch size", "batch size", "ratio (x)")
    x = range(len(batch_sizes))
    width = 0.38
    ax.bar([i - width / 2 for i in x], dense_over_toc, width, label="dense / compressed")
    ax.bar([i + width / 2 for i in x], csr_over_toc, width, label="CSR / compressed")
    ax.set_xticks(list(x), [str(b) for b in batch_sizes])
    ax.axhline(1.0, color="gray", linewidth=0.8)
    ax.legend()
    _save(fig, path)


def render_kernel_figure(
    executions: list[str],
    multiply_adds: list[int],
    wall_seconds: list[float],
    path: str | Path,
) -> None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.8, 4.0), dpi=110)
    ax1.bar(executions, multiply_adds, color="tab:blue")
    ax1.set_title("multiply-adds")
    ax1.set_yscale("log")
    ax2.bar(executions, wall_seconds, color="tab:orange")
    ax2.set_title("wall seconds (min of repeats)")
    for ax in (ax1, ax2):
        ax.grid(True, axis="y", alpha=0.3)
    _save(fig, path)


def render_risk_figure(risks_by_label: dict[str, list[float]], path: str | Path) -> None:
    fig, ax = _new_axes("Empirical risk by epoch", "epoch", "risk")
    for label, risks in risks_by_label.items():
        ax.plot(range(1, len(risks) + 1), risks, marker="o", label=label)
    if risks_by_label:
        ax.legend()
    _save(fig, path)
