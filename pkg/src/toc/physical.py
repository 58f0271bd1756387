"""Byte-level serialization of compressed matrices.

A block stores one logical encoding.  All integers are little-endian.
Layout:

    magic "TOC1" | version u8 (= 1) | n_rows u32 | n_cols u32 |
    unique_value_count u32 | raw f64 x count |
    I_count u32 | packed(pair columns) | packed(value-index refs) |
    D_total_codes u32 | packed(concatenated codes) |
    packed(row start offsets, n_rows + 1 entries)

where a packed array is

    count u32 | bytes_per_int u8 (1, 2, 3 or 4) | count * bytes_per_int payload

and bytes_per_int is the smallest width that holds the largest value
(at least 1, so packing [0] still spends a byte per entry).  Pair values
are deduplicated bit for bit: the raw float section keeps each distinct
bit pattern once, in first-occurrence order, and the refs array indexes
into it.
"""

from __future__ import annotations

import struct

from .codec import LogicalEncoding

MAGIC = b"TOC1"
VERSION = 1


class BlockFormatError(ValueError):
    """A serialized block cannot be parsed."""


class BadMagicError(BlockFormatError):
    pass


class UnsupportedVersionError(BlockFormatError):
    pass


class TruncatedBlockError(BlockFormatError):
    pass


def _int_width(largest: int) -> int:
    # Width covers the largest value, with a floor of one byte.
    return max(1, -(-largest.bit_length() // 8))


def pack_ints(values: list[int]) -> bytes:
    """Pack non-negative ints at the smallest fixed byte width."""
    largest = 0
    for v in values:
        if v < 0:
            raise ValueError(f"cannot pack negative value {v}")
        if v > largest:
            largest = v
    if largest >= 1 << 32:
        raise ValueError(f"value {largest} does not fit in four bytes")
    width = _int_width(largest)
    out = bytearray(struct.pack("<IB", len(values), width))
    for v in values:
        out += v.to_bytes(width, "little")
    return bytes(out)


def unpack_ints(data: bytes, offset: int = 0) -> tuple[list[int], int]:
    """Inverse of pack_ints; returns (values, offset past the array)."""
    if offset + 5 > len(data):
        raise TruncatedBlockError(f"packed array header truncated at offset {offset}")
    count, width = struct.unpack_from("<IB", data, offset)
    offset += 5
    if width not in (1, 2, 3, 4):
        raise BlockFormatError(f"bytes_per_int must be 1..4, got {width} at offset {offset - 1}")
    end = offset + count * width
    if end > len(data):
        raise TruncatedBlockError(
            f"packed array payload truncated: need {end - len(data)} more bytes at offset {offset}"
        )
    values = [int.from_bytes(data[i : i + width], "little") for i in range(offset, end, width)]
    return values, end


def build_value_index(values: list[float]) -> tuple[list[float], list[int]]:
    """Deduplicate floats by bit pattern, preserving first-occurrence order."""
    uniques: list[float] = []
    refs: list[int] = []
    by_bits: dict[bytes, int] = {}
    for v in values:
        bits = struct.pack("<d", v)
        ref = by_bits.get(bits)
        if ref is None:
            ref = len(uniques)
            by_bits[bits] = ref
            uniques.append(v)
        refs.append(ref)
    return uniques, refs


def value_index_lookup(uniques: list[float], ref: int) -> float:
    if not 0 <= ref < len(uniques):
        raise BlockFormatError(f"value ref {ref} out of range for {len(uniques)} unique values")
    return uniques[ref]


def serialize_block(enc: LogicalEncoding) -> bytes:
    cols = [c for c, _ in enc.pairs]
    vals = [v for _, v in enc.pairs]
    uniques, refs = build_value_index(vals)
    flat: list[int] = []
    offsets = [0]
    for row in enc.rows:
        flat.extend(row)
        offsets.append(len(flat))
    out = bytearray()
    out += MAGIC
    out += struct.pack("<BII", VERSION, enc.n_rows, enc.n_cols)
    out += struct.pack("<I", len(uniques))
    out += struct.pack(f"<{len(uniques)}d", *uniques)
    out += struct.pack("<I", len(enc.pairs))
    out += pack_ints(cols)
    out += pack_ints(refs)
    out += struct.pack("<I", len(flat))
    out += pack_ints(flat)
    out += pack_ints(offsets)
    return bytes(out)


def _need(data: bytes, offset: int, n: int, what: str) -> None:
    if offset + n > len(data):
        raise TruncatedBlockError(f"{what} truncated at offset {offset}")


def deserialize_block(data: bytes) -> LogicalEncoding:
    """Parse one block; the entire buffer must belong to it."""
    _need(data, 0, 4, "magic")
    if data[:4] != MAGIC:
        raise BadMagicError(f"bad magic {data[:4]!r}")
    _need(data, 4, 9, "header")
    version, n_rows, n_cols = struct.unpack_from("<BII", data, 4)
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported block version {version}")
    offset = 13
    _need(data, offset, 4, "unique value count")
    (n_uniques,) = struct.unpack_from("<I", data, offset)
    offset += 4
    _need(data, offset, 8 * n_uniques, "unique values")
    uniques = list(struct.unpack_from(f"<{n_uniques}d", data, offset))
    offset += 8 * n_uniques
    _need(data, offset, 4, "pair count")
    (i_count,) = struct.unpack_from("<I", data, offset)
    offset += 4
    cols, offset = unpack_ints(data, offset)
    refs, offset = unpack_ints(data, offset)
    if len(cols) != i_count or len(refs) != i_count:
        raise BlockFormatError(
            f"pair count {i_count} does not match packed arrays ({len(cols)} columns, {len(refs)} refs)"
        )
    pairs = [(col, value_index_lookup(uniques, ref)) for col, ref in zip(cols, refs)]
    _need(data, offset, 4, "code count")
    (total_codes,) = struct.unpack_from("<I", data, offset)
    offset += 4
    flat, offset = unpack_ints(data, offset)
    if len(flat) != total_codes:
        raise BlockFormatError(f"code count {total_codes} does not match packed array ({len(flat)})")
    offsets, offset = unpack_ints(data, offset)
    if offset != len(data):
        raise BlockFormatError(f"{len(data) - offset} trailing bytes after block")
    if len(offsets) != n_rows + 1:
        raise BlockFormatError(f"expected {n_rows + 1} row offsets, got {len(offsets)}")
    if offsets and (offsets[0] != 0 or offsets[-1] != total_codes):
        raise BlockFormatError("row offsets do not span the code array")
    rows: list[list[int]] = []
    for i in range(n_rows):
        lo, hi = offsets[i], offsets[i + 1]
        if lo > hi:
            raise BlockFormatError(f"row offsets not monotone at row {i}")
        rows.append(flat[lo:hi])
    try:
        return LogicalEncoding(n_rows=n_rows, n_cols=n_cols, pairs=pairs, rows=rows)
    except ValueError as exc:
        raise BlockFormatError(str(exc)) from exc
