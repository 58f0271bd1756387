"""Dataset ingestion, export, and a redundant-data generator.

Two interchange formats are supported.  libsvm lines look like
``label idx:val ...`` with 1-based, strictly ascending feature indexes
(converted to 0-based in memory); csv files carry dense feature columns
with the label in the last column.  Exports print floats with repr, so
an export/ingest round trip reproduces every value bit for bit.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .matrix import LabeledDataset, SparseRow, SparseRowMatrix, csr_matvec

FORMATS = ("libsvm", "csv")
LABEL_KINDS = ("linear", "sign")


class DataFormatError(ValueError):
    """A dataset file cannot be parsed; the message names the line."""


@dataclass
class DatasetDescriptor:
    """Where a dataset lives and how to read it."""

    path: str | Path
    format: str = "libsvm"
    n_cols: int | None = None
    has_header: bool = False

    def __post_init__(self) -> None:
        if self.format not in FORMATS:
            raise ValueError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.n_cols is not None and self.n_cols < 0:
            raise ValueError(f"n_cols override must be non-negative, got {self.n_cols}")


def _parse_float(token: str, lineno: int, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise DataFormatError(f"line {lineno}: {what} {token!r} is not a number") from None
    if not np.isfinite(value):
        raise DataFormatError(f"line {lineno}: {what} {token!r} is not finite")
    return value


def load_libsvm(path: str | Path, n_cols: int | None = None) -> LabeledDataset:
    rows: list[SparseRow] = []
    labels: list[float] = []
    widest = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            labels.append(_parse_float(tokens[0], lineno, "label"))
            row: SparseRow = []
            prev = 0
            for token in tokens[1:]:
                idx_str, _, val_str = token.partition(":")
                if not val_str:
                    raise DataFormatError(f"line {lineno}: expected idx:val, got {token!r}")
                try:
                    idx = int(idx_str)
                except ValueError:
                    raise DataFormatError(
                        f"line {lineno}: feature index {idx_str!r} is not an integer"
                    ) from None
                if idx < 1:
                    raise DataFormatError(f"line {lineno}: feature index {idx} must be >= 1")
                if idx <= prev:
                    raise DataFormatError(
                        f"line {lineno}: feature index {idx} not ascending (previous was {prev})"
                    )
                prev = idx
                value = _parse_float(val_str, lineno, "feature value")
                if value != 0.0:
                    row.append((idx - 1, value))
                if idx > widest:
                    widest = idx
            rows.append(row)
    if n_cols is None:
        n_cols = widest
    elif widest > n_cols:
        raise DataFormatError(
            f"feature index {widest} exceeds the declared column count {n_cols}"
        )
    features = SparseRowMatrix.from_rows_unchecked(n_cols, rows)
    return LabeledDataset(features=features, labels=np.asarray(labels, dtype=np.float64))


def load_csv(path: str | Path, has_header: bool = False) -> LabeledDataset:
    rows: list[SparseRow] = []
    labels: list[float] = []
    n_cols: int | None = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, record in enumerate(reader, start=1):
            if lineno == 1 and has_header:
                continue
            if not record:
                continue
            if len(record) < 1:
                raise DataFormatError(f"line {lineno}: empty record")
            width = len(record) - 1
            if n_cols is None:
                n_cols = width
            elif width != n_cols:
                raise DataFormatError(
                    f"line {lineno}: {width} feature columns, expected {n_cols}"
                )
            row: SparseRow = []
            for j, token in enumerate(record[:-1]):
                value = _parse_float(token, lineno, f"column {j}")
                if value != 0.0:
                    row.append((j, value))
            rows.append(row)
            labels.append(_parse_float(record[-1], lineno, "label"))
    if n_cols is None:
        raise DataFormatError("file contains no data rows")
    features = SparseRowMatrix.from_rows_unchecked(n_cols, rows)
    return LabeledDataset(features=features, labels=np.asarray(labels, dtype=np.float64))


def ingest(descriptor: DatasetDescriptor) -> LabeledDataset:
    if descriptor.format == "libsvm":
        return load_libsvm(descriptor.path, n_cols=descriptor.n_cols)
    return load_csv(descriptor.path, has_header=descriptor.has_header)


def save_libsvm(path: str | Path, dataset: LabeledDataset) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row, label in zip(dataset.features.rows, dataset.labels):
            parts = [repr(float(label))]
            parts.extend(f"{col + 1}:{float(val)!r}" for col, val in row)
            fh.write(" ".join(parts) + "\n")


def save_csv(path: str | Path, dataset: LabeledDataset, header: bool = False) -> None:
    n_cols = dataset.features.n_cols
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow([f"x{j}" for j in range(n_cols)] + ["label"])
        for row, label in zip(dataset.features.rows, dataset.labels):
            dense = ["0.0"] * n_cols
            for col, val in row:
                dense[col] = repr(float(val))
            writer.writerow(dense + [repr(float(label))])


def export(path: str | Path, dataset: LabeledDataset, fmt: str, header: bool = False) -> None:
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    if fmt == "libsvm":
        save_libsvm(path, dataset)
    else:
        save_csv(path, dataset, header=header)


def make_synthetic(
    n_rows: int,
    n_cols: int,
    n_templates: int,
    alphabet_size: int = 16,
    density: float = 1.0,
    seed: int = 0,
    label_kind: str = "linear",
    noise: float = 0.0,
) -> LabeledDataset:
    """Highly redundant data: a few template rows cycled n_rows times.

    Values are drawn from a small integer alphabet, so both the set of
    distinct (column, value) pairs and the set of distinct rows stay
    tiny no matter how large n_rows grows.  This is the workload the
    compressed kernels are built for and the vehicle for every ratio and
    complexity measurement in the test suite.
    """
    if n_rows < 1 or n_cols < 1:
        raise ValueError(f"need at least one row and one column, got {n_rows}x{n_cols}")
    if n_templates < 1:
        raise ValueError(f"n_templates must be at least 1, got {n_templates}")
    if alphabet_size < 1:
        raise ValueError(f"alphabet_size must be at least 1, got {alphabet_size}")
    if not 0.0 < density <= 1.0:
        raise ValueError(f"density must be in (0, 1], got {density}")
    if label_kind not in LABEL_KINDS:
        raise ValueError(f"label_kind must be one of {LABEL_KINDS}, got {label_kind!r}")
    rng = np.random.default_rng(seed)
    per_row = max(1, round(density * n_cols))
    templates: list[SparseRow] = []
    for _ in range(n_templates):
        cols = np.sort(rng.choice(n_cols, size=per_row, replace=False))
        vals = rng.integers(1, alphabet_size + 1, size=per_row)
        templates.append([(int(c), float(v)) for c, v in zip(cols, vals)])
    rows = [templates[i % n_templates] for i in range(n_rows)]
    features = SparseRowMatrix.from_rows_unchecked(n_cols, rows)
    w = rng.standard_normal(n_cols)
    z = csr_matvec(features, w)
    if noise:
        z = z + noise * rng.standard_normal(n_rows)
    if label_kind == "linear":
        labels = z
    else:
        labels = np.where(z >= 0.0, 1.0, -1.0)
    return LabeledDataset(features=features, labels=labels)
