"""Lossless compression of sparse row matrices into tuple-preserving codes.

The scheme is a row-bounded variant of LZW over (column, value) pairs.
The encoder grows a prefix-tree dictionary while scanning the matrix and
emits one code per longest dictionary match; matches and dictionary
growth never cross a row boundary, so each row compresses to an
independent code sequence and the matrix can be processed row by row
after compression.

The compressed form has two parts:

* ``I``: the distinct (column, value) pairs, in first-emission scan
  order.  These are the first layer of the prefix tree.
* ``D``: one code sequence per row.

Stored codes use decoder numbering: 0 is the (unused) tree root, codes
1..len(I) name the first-layer pairs in order, and every later code
names a node the decoder re-derives from ``D`` itself.  The decoder
therefore needs no serialized dictionary beyond ``I``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matrix import SparseRow, SparseRowMatrix

NOT_FOUND = -1


class CorruptEncodingError(ValueError):
    """A stored encoding violates the invariants the decoder relies on."""


class EncoderDictionary:
    """Prefix-tree dictionary used while encoding.

    Entries 0..n_cols-1 are per-column start markers holding no pair;
    every later entry extends its parent's pair sequence by one
    (column, value) pair.  Children are keyed by (parent, column, value)
    so that rows with equal values in different columns never alias.
    """

    __slots__ = ("n_cols", "parent", "column", "value", "start", "_children")

    def __init__(self, n_cols: int):
        if n_cols < 0:
            raise ValueError(f"n_cols must be non-negative, got {n_cols}")
        self.n_cols = n_cols
        self.parent = [NOT_FOUND] * n_cols
        self.column = list(range(n_cols))
        self.value: list[float] = [0.0] * n_cols
        self.start = list(range(n_cols))
        self._children: dict[tuple[int, int, float], int] = {}

    def __len__(self) -> int:
        return len(self.parent)

    def add(self, parent_code: int, column: int, value: float) -> int:
        """Insert a child extending parent_code by one pair; returns its code."""
        code = len(self.parent)
        self.parent.append(parent_code)
        self.column.append(column)
        self.value.append(value)
        self.start.append(self.start[parent_code] if parent_code != NOT_FOUND else column)
        self._children[(parent_code, column, value)] = code
        return code

    def get(self, parent_code: int, column: int, value: float) -> int:
        """Code of the child extending parent_code by (column, value), or NOT_FOUND."""
        return self._children.get((parent_code, column, value), NOT_FOUND)

    def sequence(self, code: int) -> SparseRow:
        """The (column, value) pairs entry `code` stands for, in row order."""
        if not 0 <= code < len(self.parent):
            raise ValueError(f"code {code} out of range")
        pairs: SparseRow = []
        while code >= self.n_cols:
            pairs.append((self.column[code], self.value[code]))
            code = self.parent[code]
        pairs.reverse()
        return pairs

    def start_index(self, code: int) -> int:
        return self.start[code]


def get_longest_match(dictionary: EncoderDictionary, row: SparseRow, pos: int) -> tuple[int, int]:
    """Greedy longest dictionary match for row[pos:].

    Returns (code, end) where the matched pairs are row[pos:end].  The
    match never extends past the end of the row.  The first pair always
    matches once the dictionary has been seeded with the matrix's
    distinct pairs.
    """
    col, val = row[pos]
    code = dictionary.get(col, col, val)
    if code == NOT_FOUND:
        raise ValueError(f"pair ({col}, {val}) not present in dictionary")
    pos += 1
    while pos < len(row):
        nxt = dictionary.get(code, row[pos][0], row[pos][1])
        if nxt == NOT_FOUND:
            break
        code = nxt
        pos += 1
    return code, pos


def encode_rows(s: SparseRowMatrix) -> tuple[EncoderDictionary, list[list[int]]]:
    """Run the encoder, returning its dictionary and per-row codes.

    Codes here use the encoder's working numbering, in which the
    per-column start markers occupy 0..n_cols-1.  Most callers want
    :func:`encode`, which renumbers into the stored form.
    """
    d = EncoderDictionary(s.n_cols)
    # Seed one entry per distinct pair, in scan order.  This guarantees
    # every single pair matches during the main pass.
    for row in s.rows:
        for col, val in row:
            if d.get(col, col, val) == NOT_FOUND:
                d.add(col, col, val)
    codes: list[list[int]] = []
    for row in s.rows:
        out: list[int] = []
        pos = 0
        while pos < len(row):
            code, end = get_longest_match(d, row, pos)
            if end < len(row):
                # Grow the dictionary by the match plus one pair, but
                # never across the row boundary.
                d.add(code, row[end][0], row[end][1])
            out.append(code)
            pos = end
        codes.append(out)
    return d, codes


@dataclass
class LogicalEncoding:
    """Compressed matrix: first-layer pairs ``I`` and per-row codes ``D``."""

    n_rows: int
    n_cols: int
    pairs: list[tuple[int, float]]
    rows: list[list[int]]

    def __post_init__(self) -> None:
        if self.n_rows != len(self.rows):
            raise ValueError(f"n_rows={self.n_rows} but {len(self.rows)} code rows")
        for col, val in self.pairs:
            if not 0 <= col < self.n_cols:
                raise ValueError(f"pair column {col} out of range for n_cols={self.n_cols}")
            if not np.isfinite(val):
                raise ValueError(f"pair value for column {col} is not finite")
        for i, row in enumerate(self.rows):
            for code in row:
                if code < 1:
                    raise ValueError(f"row {i}: code {code} is not a valid node")

    @property
    def total_codes(self) -> int:
        return sum(len(r) for r in self.rows)

    def derived_node_count(self) -> int:
        """Nodes the decoder adds beyond I: one per non-final code of each row."""
        return sum(len(r) - 1 for r in self.rows if r)

    def tree_length(self) -> int:
        """Total prefix-tree length including the root."""
        return 1 + len(self.pairs) + self.derived_node_count()


def encode(s: SparseRowMatrix) -> LogicalEncoding:
    """Compress a sparse row matrix losslessly."""
    d, raw = encode_rows(s)
    n = s.n_cols
    # Seed entries (the distinct pairs) are exactly the entries whose
    # parent is a per-column start marker, and they form a prefix.
    end = n
    while end < len(d) and d.parent[end] < n:
        end += 1
    pairs = [(d.column[c], d.value[c]) for c in range(n, end)]
    # Renumber: stored code = working code - (n_cols - 1), making the
    # first distinct pair code 1.
    shift = n - 1
    rows = [[c - shift for c in row] for row in raw]
    return LogicalEncoding(n_rows=s.n_rows, n_cols=n, pairs=pairs, rows=rows)


@dataclass
class DecodeTree:
    """Prefix tree rebuilt from a logical encoding.

    Node 0 is the root and carries no pair.  Nodes 1..len(pairs) mirror
    ``I``; later nodes are re-derived while scanning ``D`` (one per
    non-final code of each row, in scan order).  first_col/first_val
    cache each node's first pair so derivation needs no backtracking.
    """

    n_cols: int
    parent: list[int]
    column: list[int]
    value: list[float]
    first_col: list[int] = field(repr=False)
    first_val: list[float] = field(repr=False)

    def __len__(self) -> int:
        return len(self.parent)


def build_prefix_tree(enc: LogicalEncoding) -> DecodeTree:
    """Rebuild the decoder's prefix tree from (I, D).

    Raises CorruptEncodingError if any code references a node that does
    not exist yet at its point of use; within one row the codes that are
    valid are exactly those derived from strictly earlier scan positions.
    """
    parent = [NOT_FOUND]
    column = [NOT_FOUND]
    value = [0.0]
    first_col = [NOT_FOUND]
    first_val = [0.0]
    for col, val in enc.pairs:
        parent.append(0)
        column.append(col)
        value.append(val)
        first_col.append(col)
        first_val.append(val)
    for i, row in enumerate(enc.rows):
        for j, code in enumerate(row):
            if not 1 <= code < len(parent):
                raise CorruptEncodingError(
                    f"row {i}: code {code} references an undefined node (tree has {len(parent)})"
                )
            if j + 1 < len(row):
                nxt = row[j + 1]
                if not 1 <= nxt < len(parent):
                    raise CorruptEncodingError(
                        f"row {i}: code {nxt} references an undefined node (tree has {len(parent)})"
                    )
                # The node for this non-final code extends it by the
                # first pair of the code that follows it.
                parent.append(code)
                column.append(first_col[nxt])
                value.append(first_val[nxt])
                first_col.append(first_col[code])
                first_val.append(first_val[code])
    return DecodeTree(
        n_cols=enc.n_cols,
        parent=parent,
        column=column,
        value=value,
        first_col=first_col,
        first_val=first_val,
    )


def node_sequence(tree: DecodeTree, code: int) -> SparseRow:
    """The (column, value) pairs a tree node stands for, in row order."""
    if not 1 <= code < len(tree):
        raise ValueError(f"code {code} out of range for tree of length {len(tree)}")
    pairs: SparseRow = []
    while code != 0:
        pairs.append((tree.column[code], tree.value[code]))
        code = tree.parent[code]
    pairs.reverse()
    return pairs


def decode(enc: LogicalEncoding) -> SparseRowMatrix:
    """Invert :func:`encode` exactly; values come back bit for bit."""
    tree = build_prefix_tree(enc)
    parent = tree.parent
    column = tree.column
    value = tree.value
    rows: list[SparseRow] = []
    for row in enc.rows:
        out: SparseRow = []
        for code in row:
            piece: SparseRow = []
            c = code
            while c != 0:
                piece.append((column[c], value[c]))
                c = parent[c]
            piece.reverse()
            out.extend(piece)
        rows.append(out)
    return SparseRowMatrix.from_rows_unchecked(enc.n_cols, rows)
