"""Linear algebra evaluated directly on compressed matrices.

Every kernel works off the decoder's prefix tree without materializing
the matrix.  The recurring trick: a scratch array H indexed by tree node
lets one pass over the nodes (in index order, so parents are always
ready before children) plus one pass over the stored codes do the work
of a full dense traversal, at a cost proportional to tree size plus code
count instead of rows times columns.

Counters measure that cost.  A multiply-add is one fused `a*b + c`
update of an accumulator; pushing partial sums to a parent node during
the backward sweeps is bookkeeping and is not charged.  The closed form
in :func:`kernel_cost` predicts the measured counts exactly, not
approximately.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .codec import DecodeTree, LogicalEncoding, build_prefix_tree, decode, encode
from .matrix import DenseMatrix, SparseRowMatrix, as_vector, sparse_to_dense

KERNEL_KINDS = ("matvec", "vecmat", "matmat_right", "matmat_left")


@dataclass
class OpCounter:
    """Tally of work done by compressed kernels."""

    multiply_adds: int = 0
    tree_nodes_visited: int = 0
    codes_visited: int = 0


class CompressedMatrix:
    """A logical encoding plus a lazily built prefix tree.

    The tree is built at most once; a lock makes the build safe to race.
    Rewriting kernels (scalar_multiply, elementwise_power) return new
    instances and never force a build.
    """

    __slots__ = ("encoding", "_tree", "_lock")

    def __init__(self, encoding: LogicalEncoding):
        self.encoding = encoding
        self._tree: DecodeTree | None = None
        self._lock = threading.Lock()

    @classmethod
    def from_sparse(cls, s: SparseRowMatrix) -> "CompressedMatrix":
        return cls(encode(s))

    @property
    def n_rows(self) -> int:
        return self.encoding.n_rows

    @property
    def n_cols(self) -> int:
        return self.encoding.n_cols

    @property
    def tree(self) -> DecodeTree:
        t = self._tree
        if t is None:
            with self._lock:
                t = self._tree
                if t is None:
                    t = build_prefix_tree(self.encoding)
                    self._tree = t
        return t

    def decode(self) -> SparseRowMatrix:
        return decode(self.encoding)

    def __repr__(self) -> str:
        e = self.encoding
        return f"CompressedMatrix({e.n_rows}x{e.n_cols}, I={len(e.pairs)}, codes={e.total_codes})"


def scalar_multiply(a: CompressedMatrix, c: float) -> CompressedMatrix:
    """Scale every stored value; code sequences are untouched.

    Cost is proportional to the number of distinct pairs, not to the
    matrix size.  Scaling by zero keeps the stored entries in place (as
    explicit zeros), so the sparsity structure survives round trips
    through further rewrites.
    """
    c = float(c)
    if not math.isfinite(c):
        raise ValueError("scale factor must be finite")
    e = a.encoding
    pairs = [(col, c * val) for col, val in e.pairs]
    return CompressedMatrix(
        LogicalEncoding(n_rows=e.n_rows, n_cols=e.n_cols, pairs=pairs, rows=e.rows)
    )


def elementwise_power(a: CompressedMatrix, p: float) -> CompressedMatrix:
    """Raise every stored value to the power p (zeros stay untouched)."""
    p = float(p)
    e = a.encoding
    pairs = [(col, math.pow(val, p)) for col, val in e.pairs]
    return CompressedMatrix(
        LogicalEncoding(n_rows=e.n_rows, n_cols=e.n_cols, pairs=pairs, rows=e.rows)
    )


def matvec(a: CompressedMatrix, v: Sequence[float], counter: OpCounter | None = None) -> np.ndarray:
    """Return A @ v without decompressing A.

    H[node] holds the dot product of the node's pair sequence with v;
    the recurrence H[i] = value[i] * v[col[i]] + H[parent[i]] fills it in
    one ascending pass, then each row sums H over its codes.
    """
    vec = as_vector(v, a.n_cols, "vector").tolist()
    t = a.tree
    parent, column, value = t.parent, t.column, t.value
    h = [0.0] * len(t)
    nodes = 0
    for i in range(1, len(t)):
        h[i] = value[i] * vec[column[i]] + h[parent[i]]
        nodes += 1
    out = []
    seen = 0
    for row in a.encoding.rows:
        acc = 0.0
        for code in row:
            acc += h[code]
            seen += 1
        out.append(acc)
    if counter is not None:
        counter.multiply_adds += nodes + seen
        counter.tree_nodes_visited += nodes
        counter.codes_visited += seen
    return np.asarray(out, dtype=np.float64)


def vecmat(v: Sequence[float], a: CompressedMatrix, counter: OpCounter | None = None) -> np.ndarray:
    """Return v @ A without decompressing A.

    Forward pass: each code banks its row's coefficient into H.  Backward
    pass (children before parents, which descending index order gives for
    free): each node adds value * H to its output column, then hands H up
    to its parent so shared prefixes are settled once.
    """
    vec = as_vector(v, a.n_rows, "vector").tolist()
    t = a.tree
    parent, column, value = t.parent, t.column, t.value
    h = [0.0] * len(t)
    seen = 0
    for i, row in enumerate(a.encoding.rows):
        vi = vec[i]
        for code in row:
            h[code] += vi
            seen += 1
    out = [0.0] * a.n_cols
    nodes = 0
    for i in range(len(t) - 1, 0, -1):
        hi = h[i]
        out[column[i]] += value[i] * hi
        h[parent[i]] += hi
        nodes += 1
    if counter is not None:
        counter.multiply_adds += nodes + seen
        counter.tree_nodes_visited += nodes
        counter.codes_visited += seen
    return np.asarray(out, dtype=np.float64)


def matmat_right(a: CompressedMatrix, m: DenseMatrix, counter: OpCounter | None = None) -> DenseMatrix:
    """Return A @ M; the matvec recurrence runs on whole rows of M."""
    if a.n_cols != m.n_rows:
        raise ValueError(
            f"inner dimensions differ: left has {a.n_cols} columns, right has {m.n_rows} rows"
        )
    t = a.tree
    parent, column, value = t.parent, t.column, t.value
    rhs = m.values
    p = m.n_cols
    h = np.zeros((len(t), p), dtype=np.float64)
    nodes = 0
    for i in range(1, len(t)):
        h[i] = value[i] * rhs[column[i]] + h[parent[i]]
        nodes += 1
    out = np.zeros((a.n_rows, p), dtype=np.float64)
    seen = 0
    for r, row in enumerate(a.encoding.rows):
        acc = out[r]
        for code in row:
            acc += h[code]
            seen += 1
    if counter is not None:
        counter.multiply_adds += (nodes + seen) * p
        counter.tree_nodes_visited += nodes
        counter.codes_visited += seen
    return DenseMatrix(out)


def matmat_left(m: DenseMatrix, a: CompressedMatrix, counter: OpCounter | None = None) -> DenseMatrix:
    """Return M @ A; the vecmat sweep runs on whole columns of M."""
    if m.n_cols != a.n_rows:
        raise ValueError(
            f"inner dimensions differ: left has {m.n_cols} columns, right has {a.n_rows} rows"
        )
    t = a.tree
    parent, column, value = t.parent, t.column, t.value
    lhs = m.values
    p = m.n_rows
    h = np.zeros((len(t), p), dtype=np.float64)
    seen = 0
    for i, row in enumerate(a.encoding.rows):
        col_i = lhs[:, i]
        for code in row:
            h[code] += col_i
            seen += 1
    out = np.zeros((p, a.n_cols), dtype=np.float64)
    nodes = 0
    for i in range(len(t) - 1, 0, -1):
        hi = h[i]
        out[:, column[i]] += value[i] * hi
        h[parent[i]] += hi
        nodes += 1
    if counter is not None:
        counter.multiply_adds += (nodes + seen) * p
        counter.tree_nodes_visited += nodes
        counter.codes_visited += seen
    return DenseMatrix(out)


def scalar_add(a: CompressedMatrix, c: float) -> DenseMatrix:
    """Return A + c as a dense matrix.

    Adding to the implicit zeros densifies the result, so this kernel
    decompresses; there is no sparsity-preserving shortcut to take.
    """
    c = float(c)
    if not math.isfinite(c):
        raise ValueError("addend must be finite")
    dense = sparse_to_dense(a.decode())
    return DenseMatrix(dense.values + c)


def kernel_cost(a: CompressedMatrix, kind: str, width: int = 1) -> int:
    """Predicted multiply-add count for a traversal kernel.

    One multiply-add per non-root tree node and one per stored code,
    scaled by the number of vector lanes (1 for matvec/vecmat, the other
    operand's free dimension for the matrix-matrix kernels).  Kernels
    report exactly this number in OpCounter.multiply_adds.
    """
    if kind not in KERNEL_KINDS:
        raise ValueError(f"unknown kernel kind {kind!r}; expected one of {KERNEL_KINDS}")
    if width < 1:
        raise ValueError(f"width must be positive, got {width}")
    if kind in ("matvec", "vecmat") and width != 1:
        raise ValueError(f"{kind} has a single lane; width {width} is meaningless")
    e = a.encoding
    non_root = len(e.pairs) + e.derived_node_count()
    return (non_root + e.total_codes) * width


def dense_kernel_cost(n_rows: int, n_cols: int, kind: str, width: int = 1) -> int:
    """Baseline count for the dense loop: a multiply and an add per cell.

    The dense convention charges two units per touched cell where the
    compressed kernels charge one fused update; both conventions are
    fixed so measured ratios mean the same thing run to run.
    """
    if kind not in KERNEL_KINDS:
        raise ValueError(f"unknown kernel kind {kind!r}; expected one of {KERNEL_KINDS}")
    return 2 * n_rows * n_cols * width


def csr_kernel_cost(nnz: int, kind: str, width: int = 1) -> int:
    """Baseline count for the sparse-row loop: two units per stored entry."""
    if kind not in KERNEL_KINDS:
        raise ValueError(f"unknown kernel kind {kind!r}; expected one of {KERNEL_KINDS}")
    return 2 * nnz * width
