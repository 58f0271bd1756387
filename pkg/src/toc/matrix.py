"""Matrix containers and reference linear-algebra kernels.

Two storage layouts are used throughout the package: row-major dense
matrices and sparse matrices stored as per-row lists of (column, value)
pairs.  The kernels in this module are deliberately written as explicit
loops that accumulate in ascending index order; that fixed order is the
reference behaviour every other kernel in the package is compared
against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SparseRow = list[tuple[int, float]]


def as_vector(v: Sequence[float], expected: int, name: str) -> np.ndarray:
    """Normalize to a finite float64 vector of the expected length."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.shape[0] != expected:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {expected}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


class DenseMatrix:
    """Row-major dense matrix of 64-bit floats.

    Entries must be finite; NaN and infinities are rejected at
    construction so downstream kernels never have to re-check.
    """

    __slots__ = ("values",)

    def __init__(self, values: Sequence[Sequence[float]] | np.ndarray):
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"dense matrix needs a 2-d array, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("dense matrix entries must be finite")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self.values = arr

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]

    def row_lists(self) -> list[list[float]]:
        """Rows as plain Python lists, for loop-heavy callers."""
        return self.values.tolist()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DenseMatrix):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(
            np.array_equal(self.values, other.values)
        )

    def __hash__(self) -> None:  # type: ignore[override]
        raise TypeError("DenseMatrix is not hashable")

    def __repr__(self) -> str:
        return f"DenseMatrix({self.n_rows}x{self.n_cols})"


class SparseRowMatrix:
    """Sparse matrix stored as one list of (column, value) pairs per row.

    Within a row the column indexes are strictly increasing, values are
    finite and never zero, and every column index lies in [0, n_cols).
    Construction validates all of this; use :meth:`from_rows_unchecked`
    only for rows that are trusted by construction (e.g. the output of a
    decoder whose input was validated earlier).
    """

    __slots__ = ("n_cols", "rows")

    def __init__(self, n_cols: int, rows: Iterable[Iterable[tuple[int, float]]]):
        if n_cols < 0:
            raise ValueError(f"n_cols must be non-negative, got {n_cols}")
        checked: list[SparseRow] = []
        for i, row in enumerate(rows):
            prev = -1
            out: SparseRow = []
            for col, val in row:
                col = int(col)
                val = float(val)
                if col <= prev:
                    raise ValueError(
                        f"row {i}: column {col} after {prev}; columns must be strictly increasing"
                    )
                if col >= n_cols:
                    raise ValueError(f"row {i}: column {col} out of range for n_cols={n_cols}")
                if val == 0.0:
                    raise ValueError(f"row {i}: explicit zero at column {col}")
                if not np.isfinite(val):
                    raise ValueError(f"row {i}: non-finite value at column {col}")
                out.append((col, val))
                prev = col
            checked.append(out)
        self.n_cols = n_cols
        self.rows = checked

    @classmethod
    def from_rows_unchecked(
        cls, n_cols: int, rows: list[SparseRow]
    ) -> "SparseRowMatrix":
        m = object.__new__(cls)
        m.n_cols = n_cols
        m.rows = rows
        return m

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def nnz(self) -> int:
        return sum(len(r) for r in self.rows)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseRowMatrix):
            return NotImplemented
        return self.n_cols == other.n_cols and self.rows == other.rows

    def __hash__(self) -> None:  # type: ignore[override]
        raise TypeError("SparseRowMatrix is not hashable")

    def __repr__(self) -> str:
        return f"SparseRowMatrix({self.n_rows}x{self.n_cols}, nnz={self.nnz})"


@dataclass
class LabeledDataset:
    """Feature matrix plus one numeric label per row."""

    features: SparseRowMatrix
    labels: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        self.labels = as_vector(self.labels, self.features.n_rows, "labels")

    @property
    def n_rows(self) -> int:
        return self.features.n_rows

    @property
    def n_cols(self) -> int:
        return self.features.n_cols


def dense_matvec(a: DenseMatrix, v: Sequence[float]) -> np.ndarray:
    """Return A @ v, accumulating each row sum left to right."""
    vec = as_vector(v, a.n_cols, "vector").tolist()
    out = []
    for row in a.row_lists():
        acc = 0.0
        for j, x in enumerate(row):
            acc += x * vec[j]
        out.append(acc)
    return np.asarray(out, dtype=np.float64)


def dense_vecmat(v: Sequence[float], a: DenseMatrix) -> np.ndarray:
    """Return v @ A; each output column accumulates over rows in ascending order."""
    vec = as_vector(v, a.n_rows, "vector").tolist()
    rows = a.row_lists()
    out = [0.0] * a.n_cols
    for j in range(a.n_cols):
        acc = 0.0
        for i in range(a.n_rows):
            acc += vec[i] * rows[i][j]
        out[j] = acc
    return np.asarray(out, dtype=np.float64)


def dense_matmat(a: DenseMatrix, m: DenseMatrix) -> DenseMatrix:
    """Return A @ M with the inner dimension accumulated in ascending order."""
    if a.n_cols != m.n_rows:
        raise ValueError(
            f"inner dimensions differ: left has {a.n_cols} columns, right has {m.n_rows} rows"
        )
    lhs = a.row_lists()
    rhs = m.row_lists()
    p = m.n_cols
    out = np.zeros((a.n_rows, p), dtype=np.float64)
    for i in range(a.n_rows):
        row = lhs[i]
        for j in range(p):
            acc = 0.0
            for k in range(a.n_cols):
                acc += row[k] * rhs[k][j]
            out[i, j] = acc
    return DenseMatrix(out)


def sparse_to_dense(s: SparseRowMatrix) -> DenseMatrix:
    out = np.zeros((s.n_rows, s.n_cols), dtype=np.float64)
    for i, row in enumerate(s.rows):
        for col, val in row:
            out[i, col] = val
    return DenseMatrix(out)


def dense_to_sparse(a: DenseMatrix) -> SparseRowMatrix:
    """Drop exact zeros; surviving entries keep their values bit for bit."""
    rows: list[SparseRow] = []
    for row in a.row_lists():
        rows.append([(j, x) for j, x in enumerate(row) if x != 0.0])
    return SparseRowMatrix.from_rows_unchecked(a.n_cols, rows)


def csr_matvec(s: SparseRowMatrix, v: Sequence[float]) -> np.ndarray:
    """Return S @ v.

    Skipped zero entries contribute exact 0.0 terms in the dense kernel,
    so the result matches dense_matvec on the densified matrix bit for
    bit, not merely within tolerance.
    """
    vec = as_vector(v, s.n_cols, "vector").tolist()
    out = []
    for row in s.rows:
        acc = 0.0
        for col, val in row:
            acc += val * vec[col]
        out.append(acc)
    return np.asarray(out, dtype=np.float64)


def csr_vecmat(v: Sequence[float], s: SparseRowMatrix) -> np.ndarray:
    vec = as_vector(v, s.n_rows, "vector").tolist()
    out = [0.0] * s.n_cols
    for i, row in enumerate(s.rows):
        vi = vec[i]
        for col, val in row:
            out[col] += vi * val
    return np.asarray(out, dtype=np.float64)


def csr_matmat_right(s: SparseRowMatrix, m: DenseMatrix) -> DenseMatrix:
    """Return S @ M for sparse S and dense M."""
    if s.n_cols != m.n_rows:
        raise ValueError(
            f"inner dimensions differ: left has {s.n_cols} columns, right has {m.n_rows} rows"
        )
    rhs = m.values
    out = np.zeros((s.n_rows, m.n_cols), dtype=np.float64)
    for i, row in enumerate(s.rows):
        acc = out[i]
        for col, val in row:
            acc += val * rhs[col]
    return DenseMatrix(out)


def csr_matmat_left(m: DenseMatrix, s: SparseRowMatrix) -> DenseMatrix:
    """Return M @ S for dense M and sparse S."""
    if m.n_cols != s.n_rows:
        raise ValueError(
            f"inner dimensions differ: left has {m.n_cols} columns, right has {s.n_rows} rows"
        )
    lhs = m.values
    out = np.zeros((m.n_rows, s.n_cols), dtype=np.float64)
    for i, row in enumerate(s.rows):
        col_of_m = lhs[:, i]
        for col, val in row:
            out[:, col] += col_of_m * val
    return DenseMatrix(out)
