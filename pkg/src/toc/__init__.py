"""Tuple-oriented compression for sparse matrices.

A row-bounded LZW variant compresses a sparse matrix into a reusable
prefix tree plus per-row code sequences; linear-algebra kernels and a
mini-batch gradient-descent trainer then run directly on the compressed
form.  Work scales with the compressed size, so the more redundant the
data, the cheaper both storage and arithmetic get.
"""

from .codec import (
    CorruptEncodingError,
    DecodeTree,
    EncoderDictionary,
    LogicalEncoding,
    build_prefix_tree,
    decode,
    encode,
    get_longest_match,
    node_sequence,
)
from .kernels import (
    CompressedMatrix,
    OpCounter,
    elementwise_power,
    kernel_cost,
    matmat_left,
    matmat_right,
    matvec,
    scalar_add,
    scalar_multiply,
    vecmat,
)
from .matrix import (
    DenseMatrix,
    LabeledDataset,
    SparseRowMatrix,
    csr_matvec,
    csr_vecmat,
    dense_matmat,
    dense_matvec,
    dense_to_sparse,
    dense_vecmat,
    sparse_to_dense,
)
from .physical import (
    BadMagicError,
    BlockFormatError,
    TruncatedBlockError,
    UnsupportedVersionError,
    deserialize_block,
    pack_ints,
    serialize_block,
    unpack_ints,
)
from .training import (
    GlmModel,
    LossTrace,
    NnModel,
    TrainConfig,
    empirical_risk,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "BadMagicError",
    "BlockFormatError",
    "CompressedMatrix",
    "CorruptEncodingError",
    "DecodeTree",
    "DenseMatrix",
    "EncoderDictionary",
    "GlmModel",
    "LabeledDataset",
    "LogicalEncoding",
    "LossTrace",
    "NnModel",
    "OpCounter",
    "SparseRowMatrix",
    "TrainConfig",
    "TruncatedBlockError",
    "UnsupportedVersionError",
    "build_prefix_tree",
    "csr_matvec",
    "csr_vecmat",
    "decode",
    "dense_matmat",
    "dense_matvec",
    "dense_to_sparse",
    "dense_vecmat",
    "deserialize_block",
    "elementwise_power",
    "empirical_risk",
    "encode",
    "get_longest_match",
    "kernel_cost",
    "matmat_left",
    "matmat_right",
    "matvec",
    "node_sequence",
    "pack_ints",
    "scalar_add",
    "scalar_multiply",
    "serialize_block",
    "sparse_to_dense",
    "train",
    "unpack_ints",
    "vecmat",
]
