"""Shared fixtures: hand-traced encodings and random matrix factories."""

from __future__ import annotations

import struct

import numpy as np
import pytest

from toc.matrix import SparseRowMatrix

# Two-row worked example used throughout: values a..g stand for seven
# distinct floats.  Row 2 shares the [c, d, e] tail of row 1, so its
# encoding reuses a multi-pair dictionary entry.
A, B, C, D, E, F, G = 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0


@pytest.fixture
def toy_matrix() -> SparseRowMatrix:
    return SparseRowMatrix(
        5,
        [
            [(0, A), (1, B), (2, C), (3, D), (4, E)],
            [(0, F), (1, G), (2, C), (3, D), (4, E)],
        ],
    )


@pytest.fixture
def tree_matrix() -> SparseRowMatrix:
    # Three sparse rows whose decode tree has exactly 11 nodes: the
    # root, five first-layer pairs, and five derived nodes.  Rows 1 and
    # 2 are identical; row 3 shares their (3, 3.0), (4, 1.4) tail but
    # starts at a different column.
    return SparseRowMatrix(
        5,
        [
            [(1, 1.1), (2, 2.0), (3, 3.0), (4, 1.4)],
            [(1, 1.1), (2, 2.0), (3, 3.0), (4, 1.4)],
            [(2, 1.1), (3, 3.0), (4, 1.4)],
        ],
    )


def random_alphabet_matrix(
    rng: np.random.Generator,
    n_rows: int,
    n_cols: int,
    density: float,
    alphabet_size: int = 16,
    integer_alphabet: bool = False,
) -> SparseRowMatrix:
    """Random sparse matrix whose values come from a small alphabet."""
    if integer_alphabet:
        alphabet = np.arange(1, alphabet_size + 1, dtype=np.float64)
    else:
        alphabet = np.zeros(0)
        while len(np.unique(alphabet)) != alphabet_size:
            alphabet = np.round(rng.standard_normal(alphabet_size) * 4, 3)
            alphabet = alphabet[alphabet != 0.0]
    rows = []
    for _ in range(n_rows):
        mask = rng.random(n_cols) < density
        cols = np.flatnonzero(mask)
        vals = rng.choice(alphabet, size=len(cols))
        rows.append([(int(c), float(v)) for c, v in zip(cols, vals)])
    return SparseRowMatrix.from_rows_unchecked(n_cols, rows)


def rows_bit_equal(got: SparseRowMatrix, want: SparseRowMatrix) -> bool:
    """Structural equality with bit-level float comparison."""
    if got.n_cols != want.n_cols or got.n_rows != want.n_rows:
        return False
    for gr, wr in zip(got.rows, want.rows):
        if len(gr) != len(wr):
            return False
        for (gc, gv), (wc, wv) in zip(gr, wr):
            if gc != wc or struct.pack("<d", gv) != struct.pack("<d", wv):
                return False
    return True
