"""On-disk containers: compressed batch stores and trained models.

A batch store keeps one serialized block per mini-batch plus that
batch's raw labels, so a training run can stream compressed batches
straight from disk.  All integers are little-endian; labels are raw
64-bit floats and survive round trips bit for bit.

Store layout:

    magic "TOCS" | version u8 (= 1) | batch_count u32 | batch_size u32 |
    total_rows u32 | n_cols u32 | seed i64 |
    per batch: block_len u32 | block bytes | label_count u32 | raw f64 labels

Model layout:

    magic "TOCM" | version u8 (= 1) | loss_kind u8 | n_cols u32 | hidden u32 |
    raw f64 weights (hidden = 0 marks a linear model; networks store W1
    row-major, then W2)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codec import LogicalEncoding
from .physical import (
    BadMagicError,
    BlockFormatError,
    TruncatedBlockError,
    UnsupportedVersionError,
    deserialize_block,
)
from .training import GlmModel, LOSS_KINDS, Model, NnModel

STORE_MAGIC = b"TOCS"
MODEL_MAGIC = b"TOCM"
STORE_VERSION = 1
MODEL_VERSION = 1


@dataclass
class BatchStoreData:
    """A parsed batch store: header fields plus (encoding, labels) pairs."""

    batch_size: int
    n_cols: int
    seed: int
    batches: list[tuple[LogicalEncoding, np.ndarray]]

    @property
    def total_rows(self) -> int:
        return sum(enc.n_rows for enc, _ in self.batches)


def save_batch_store(
    path: str | Path,
    blocks: list[bytes],
    labels: list[np.ndarray],
    batch_size: int,
    n_cols: int,
    seed: int,
) -> None:
    if len(blocks) != len(labels):
        raise ValueError(f"{len(blocks)} blocks but {len(labels)} label groups")
    total_rows = sum(len(ls) for ls in labels)
    with open(path, "wb") as fh:
        fh.write(STORE_MAGIC)
        fh.write(struct.pack("<BIIIIq", STORE_VERSION, len(blocks), batch_size, total_rows, n_cols, seed))
        for block, batch_labels in zip(blocks, labels):
            fh.write(struct.pack("<I", len(block)))
            fh.write(block)
            arr = np.asarray(batch_labels, dtype=np.float64)
            fh.write(struct.pack("<I", len(arr)))
            fh.write(struct.pack(f"<{len(arr)}d", *arr))


def _take(data: bytes, offset: int, n: int, what: str) -> int:
    if offset + n > len(data):
        raise TruncatedBlockError(f"store {what} truncated at offset {offset}")
    return offset + n


def load_batch_store(path: str | Path) -> BatchStoreData:
    data = Path(path).read_bytes()
    _take(data, 0, 4, "magic")
    if data[:4] != STORE_MAGIC:
        raise BadMagicError(f"bad store magic {data[:4]!r}")
    offset = _take(data, 4, 25, "header")
    version, batch_count, batch_size, total_rows, n_cols, seed = struct.unpack_from(
        "<BIIIIq", data, 4
    )
    if version != STORE_VERSION:
        raise UnsupportedVersionError(f"unsupported store version {version}")
    batches: list[tuple[LogicalEncoding, np.ndarray]] = []
    rows_seen = 0
    for b in range(batch_count):
        end = _take(data, offset, 4, f"batch {b} block length")
        (block_len,) = struct.unpack_from("<I", data, offset)
        offset = end
        end = _take(data, offset, block_len, f"batch {b} block")
        enc = deserialize_block(data[offset:end])
        offset = end
        end = _take(data, offset, 4, f"batch {b} label count")
        (label_count,) = struct.unpack_from("<I", data, offset)
        offset = end
        if label_count != enc.n_rows:
            raise BlockFormatError(
                f"batch {b}: {label_count} labels for {enc.n_rows} rows"
            )
        end = _take(data, offset, 8 * label_count, f"batch {b} labels")
        batch_labels = np.frombuffer(data[offset:end], dtype="<f8").astype(np.float64)
        offset = end
        if enc.n_cols != n_cols:
            raise BlockFormatError(
                f"batch {b}: block has {enc.n_cols} columns, store header says {n_cols}"
            )
        rows_seen += enc.n_rows
        batches.append((enc, batch_labels))
    if offset != len(data):
        raise BlockFormatError(f"{len(data) - offset} trailing bytes after store")
    if rows_seen != total_rows:
        raise BlockFormatError(
            f"store header says {total_rows} rows, batches hold {rows_seen}"
        )
    return BatchStoreData(batch_size=batch_size, n_cols=n_cols, seed=seed, batches=batches)


_LOSS_TO_CODE = {kind: i for i, kind in enumerate(LOSS_KINDS)}


def save_model(path: str | Path, model: Model, loss_kind: str) -> None:
    if loss_kind not in _LOSS_TO_CODE:
        raise ValueError(f"loss_kind must be one of {LOSS_KINDS}, got {loss_kind!r}")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        if isinstance(model, GlmModel):
            w = model.weights
            fh.write(struct.pack("<BBII", MODEL_VERSION, _LOSS_TO_CODE[loss_kind], len(w), 0))
            fh.write(struct.pack(f"<{len(w)}d", *w))
        else:
            n_cols, hidden = model.w1.shape
            fh.write(struct.pack("<BBII", MODEL_VERSION, _LOSS_TO_CODE[loss_kind], n_cols, hidden))
            flat = np.concatenate([model.w1.reshape(-1), model.w2.reshape(-1)])
            fh.write(struct.pack(f"<{len(flat)}d", *flat))


def load_model(path: str | Path) -> tuple[Model, str]:
    data = Path(path).read_bytes()
    _take(data, 0, 4, "model magic")
    if data[:4] != MODEL_MAGIC:
        raise BadMagicError(f"bad model magic {data[:4]!r}")
    _take(data, 4, 10, "model header")
    version, loss_code, n_cols, hidden = struct.unpack_from("<BBII", data, 4)
    if version != MODEL_VERSION:
        raise UnsupportedVersionError(f"unsupported model version {version}")
    if loss_code >= len(LOSS_KINDS):
        raise BlockFormatError(f"unknown loss code {loss_code}")
    loss_kind = LOSS_KINDS[loss_code]
    count = n_cols if hidden == 0 else n_cols * hidden + hidden
    _take(data, 14, 8 * count, "model weights")
    flat = np.frombuffer(data[14 : 14 + 8 * count], dtype="<f8").astype(np.float64)
    if 14 + 8 * count != len(data):
        raise BlockFormatError(f"{len(data) - 14 - 8 * count} trailing bytes after model")
    if hidden == 0:
        return GlmModel(weights=flat), loss_kind
    w1 = flat[: n_cols * hidden].reshape(n_cols, hidden)
    w2 = flat[n_cols * hidden :].reshape(hidden, 1)
    return NnModel(w1=w1, w2=w2), loss_kind
