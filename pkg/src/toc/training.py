"""Mini-batch gradient descent over compressed, dense, or sparse batches.

The training loop is layout-agnostic: the dataset is shuffled once,
split into fixed batches, and each batch's feature matrix is stored in
the layout named by the config.  Gradients only ever touch the features
through matvec/vecmat (GLMs) or the two matrix-matrix products (the
one-hidden-layer network), so swapping the layout changes the arithmetic
route but not the numbers beyond float reordering.

Batch size 1 gives stochastic descent, batch size >= n gives full-batch
descent; nothing in the loop special-cases either extreme.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .kernels import CompressedMatrix, OpCounter
from .matrix import (
    DenseMatrix,
    LabeledDataset,
    SparseRowMatrix,
    as_vector,
    csr_matmat_left,
    csr_matmat_right,
    csr_matvec,
    csr_vecmat,
    dense_matmat,
    dense_matvec,
    dense_vecmat,
    sparse_to_dense,
)

LOSS_KINDS = ("squared", "logistic", "hinge", "nn_mse")
EXECUTION_MODES = ("compressed", "dense", "csr")

FeatureBlock = CompressedMatrix | DenseMatrix | SparseRowMatrix


@dataclass
class TrainConfig:
    loss_kind: str
    batch_size: int
    learning_rate: float
    epochs: int
    seed: int = 0
    hidden_units: int = 16
    execution: str = "compressed"

    def __post_init__(self) -> None:
        if self.loss_kind not in LOSS_KINDS:
            raise ValueError(f"loss_kind must be one of {LOSS_KINDS}, got {self.loss_kind!r}")
        if self.execution not in EXECUTION_MODES:
            raise ValueError(f"execution must be one of {EXECUTION_MODES}, got {self.execution!r}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be at least 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be at least 1, got {self.epochs}")
        if not (math.isfinite(self.learning_rate) and self.learning_rate > 0):
            raise ValueError(f"learning_rate must be positive and finite, got {self.learning_rate}")
        if self.loss_kind == "nn_mse" and self.hidden_units < 1:
            raise ValueError(f"hidden_units must be at least 1, got {self.hidden_units}")


@dataclass
class GlmModel:
    """Linear model scoring each example as x . weights."""

    weights: np.ndarray

    def __post_init__(self) -> None:
        self.weights = as_vector(self.weights, len(self.weights), "weights")


@dataclass
class NnModel:
    """One hidden layer with logistic-sigmoid activation, linear output."""

    w1: np.ndarray
    w2: np.ndarray

    def __post_init__(self) -> None:
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        if self.w1.ndim != 2 or self.w2.ndim != 2 or self.w2.shape != (self.w1.shape[1], 1):
            raise ValueError(
                f"layer shapes do not chain: w1 {self.w1.shape}, w2 {self.w2.shape}"
            )

    @property
    def hidden_units(self) -> int:
        return self.w1.shape[1]


Model = GlmModel | NnModel


@dataclass
class Batch:
    features: FeatureBlock
    labels: np.ndarray

    @property
    def size(self) -> int:
        return len(self.labels)


@dataclass
class BatchStore:
    """Batches in shuffle order, all in one storage layout."""

    batches: list[Batch]
    n_cols: int
    execution: str


@dataclass
class LossTrace:
    """Per-epoch empirical risk on the full dataset, plus wall time."""

    risks: list[float] = field(default_factory=list)
    seconds: list[float] = field(default_factory=list)


def shuffle_once(dataset: LabeledDataset, seed: int) -> LabeledDataset:
    """Fisher-Yates shuffle of rows and labels together, done exactly once.

    Batches are carved out of the shuffled order and reused every epoch;
    there is no per-epoch reshuffle, so compressed batches are built once
    and stay valid for the whole run.
    """
    order = list(range(dataset.n_rows))
    random.Random(seed).shuffle(order)
    rows = [dataset.features.rows[i] for i in order]
    features = SparseRowMatrix.from_rows_unchecked(dataset.features.n_cols, rows)
    return LabeledDataset(features=features, labels=dataset.labels[order])


def make_batches(dataset: LabeledDataset, batch_size: int, execution: str) -> BatchStore:
    """Split into consecutive batches; the last one may be short."""
    if execution not in EXECUTION_MODES:
        raise ValueError(f"execution must be one of {EXECUTION_MODES}, got {execution!r}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be at least 1, got {batch_size}")
    if dataset.n_rows == 0:
        raise ValueError("cannot batch an empty dataset")
    batches: list[Batch] = []
    for lo in range(0, dataset.n_rows, batch_size):
        hi = min(lo + batch_size, dataset.n_rows)
        piece = SparseRowMatrix.from_rows_unchecked(
            dataset.features.n_cols, dataset.features.rows[lo:hi]
        )
        features: FeatureBlock
        if execution == "compressed":
            features = CompressedMatrix.from_sparse(piece)
        elif execution == "dense":
            features = sparse_to_dense(piece)
        else:
            features = piece
        batches.append(Batch(features=features, labels=dataset.labels[lo:hi]))
    return BatchStore(batches=batches, n_cols=dataset.features.n_cols, execution=execution)


def _features_matvec(features: FeatureBlock, w: np.ndarray, counter: OpCounter | None) -> np.ndarray:
    if isinstance(features, CompressedMatrix):
        return kernels.matvec(features, w, counter)
    if isinstance(features, DenseMatrix):
        return dense_matvec(features, w)
    return csr_matvec(features, w)


def _features_vecmat(v: np.ndarray, features: FeatureBlock, counter: OpCounter | None) -> np.ndarray:
    if isinstance(features, CompressedMatrix):
        return kernels.vecmat(v, features, counter)
    if isinstance(features, DenseMatrix):
        return dense_vecmat(v, features)
    return csr_vecmat(v, features)


def _features_matmat_right(
    features: FeatureBlock, m: DenseMatrix, counter: OpCounter | None
) -> DenseMatrix:
    if isinstance(features, CompressedMatrix):
        return kernels.matmat_right(features, m, counter)
    if isinstance(features, DenseMatrix):
        return dense_matmat(features, m)
    return csr_matmat_right(features, m)


def _features_matmat_left(
    m: DenseMatrix, features: FeatureBlock, counter: OpCounter | None
) -> DenseMatrix:
    if isinstance(features, CompressedMatrix):
        return kernels.matmat_left(m, features, counter)
    if isinstance(features, DenseMatrix):
        return dense_matmat(m, features)
    return csr_matmat_left(m, features)


def _softplus(t: np.ndarray) -> np.ndarray:
    # log(1 + exp(t)) without overflow for large |t|.
    out = np.empty_like(t)
    pos = t > 0
    out[pos] = t[pos] + np.log1p(np.exp(-t[pos]))
    out[~pos] = np.log1p(np.exp(t[~pos]))
    return out


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _nn_forward(features: FeatureBlock, model: NnModel, counter: OpCounter | None):
    z1 = _features_matmat_right(features, DenseMatrix(model.w1), counter)
    h1 = _sigmoid(z1.values)
    yhat = h1 @ model.w2
    return h1, yhat


def empirical_risk(model: Model, dataset: LabeledDataset, loss_kind: str) -> float:
    """Mean per-example loss over the whole dataset.

    Always evaluated on the plain sparse features, whatever layout
    training used, so risk traces from different execution modes are
    directly comparable.
    """
    if loss_kind not in LOSS_KINDS:
        raise ValueError(f"loss_kind must be one of {LOSS_KINDS}, got {loss_kind!r}")
    if dataset.n_rows == 0:
        raise ValueError("empirical risk of an empty dataset is undefined")
    y = dataset.labels
    if loss_kind == "nn_mse":
        if not isinstance(model, NnModel):
            raise TypeError("nn_mse risk needs an NnModel")
        _, yhat = _nn_forward(dataset.features, model, None)
        losses = 0.5 * (y - yhat[:, 0]) ** 2
        return float(np.mean(losses))
    if not isinstance(model, GlmModel):
        raise TypeError(f"{loss_kind} risk needs a GlmModel")
    z = csr_matvec(dataset.features, model.weights)
    if loss_kind == "squared":
        losses = 0.5 * (y - z) ** 2
    elif loss_kind == "logistic":
        losses = _softplus(-y * z)
    else:
        losses = np.maximum(0.0, 1.0 - y * z)
    return float(np.mean(losses))


def glm_gradient(
    batch: Batch, model: GlmModel, loss_kind: str, counter: OpCounter | None = None
) -> np.ndarray:
    """Summed (not averaged) gradient of the batch loss in the weights.

    One matvec scores the batch, one vecmat folds the per-example scalar
    back onto the features; those are the only two touches of the
    feature matrix, in whatever layout the batch carries.
    """
    z = _features_matvec(batch.features, model.weights, counter)
    y = batch.labels
    if loss_kind == "squared":
        s = z - y
    elif loss_kind == "logistic":
        s = -y / (1.0 + np.exp(y * z))
    elif loss_kind == "hinge":
        # Subgradient: flat side of the kink contributes zero.
        s = np.where(y * z < 1.0, -y, 0.0)
    else:
        raise ValueError(f"glm_gradient cannot handle loss_kind {loss_kind!r}")
    return _features_vecmat(s, batch.features, counter)


def nn_gradient(
    batch: Batch, model: NnModel, counter: OpCounter | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Summed gradients (dW1, dW2) of the half-squared output error."""
    h1, yhat = _nn_forward(batch.features, model, counter)
    err = yhat - batch.labels[:, None]
    g_w2 = h1.T @ err
    delta = (err @ model.w2.T) * h1 * (1.0 - h1)
    g_w1_t = _features_matmat_left(DenseMatrix(delta.T), batch.features, counter)
    return g_w1_t.values.T.copy(), g_w2


def apply_update(
    weights: np.ndarray, gradient: np.ndarray, learning_rate: float, batch_size: int
) -> np.ndarray:
    """weights - (learning_rate / batch_size) * gradient, nothing more."""
    return weights - (learning_rate / batch_size) * gradient


def mgd_step(
    model: Model, batch: Batch, config: TrainConfig, counter: OpCounter | None = None
) -> Model:
    """One descent step on one batch; returns a new model."""
    if config.loss_kind == "nn_mse":
        assert isinstance(model, NnModel)
        g_w1, g_w2 = nn_gradient(batch, model, counter)
        return NnModel(
            w1=apply_update(model.w1, g_w1, config.learning_rate, batch.size),
            w2=apply_update(model.w2, g_w2, config.learning_rate, batch.size),
        )
    assert isinstance(model, GlmModel)
    g = glm_gradient(batch, model, config.loss_kind, counter)
    return GlmModel(weights=apply_update(model.weights, g, config.learning_rate, batch.size))


def init_model(config: TrainConfig, n_cols: int) -> Model:
    """Zero weights for GLMs; small seeded uniform weights for the network.

    The network cannot start at zero: with both layers zero the hidden
    error term does too, and dW1 stays zero forever.
    """
    if config.loss_kind != "nn_mse":
        return GlmModel(weights=np.zeros(n_cols, dtype=np.float64))
    rng = np.random.default_rng(config.seed)
    s1 = 1.0 / math.sqrt(max(n_cols, 1))
    s2 = 1.0 / math.sqrt(config.hidden_units)
    return NnModel(
        w1=rng.uniform(-s1, s1, size=(n_cols, config.hidden_units)),
        w2=rng.uniform(-s2, s2, size=(config.hidden_units, 1)),
    )


def train(
    dataset: LabeledDataset, config: TrainConfig, counter: OpCounter | None = None
) -> tuple[Model, LossTrace]:
    """Shuffle once, batch once, then run the configured number of epochs.

    The returned trace holds the full-dataset risk after each epoch.
    Runs with the same seed are deterministic; runs differing only in
    execution layout agree up to floating-point reordering.
    """
    if dataset.n_rows == 0:
        raise ValueError("cannot train on an empty dataset")
    if config.loss_kind in ("logistic", "hinge"):
        bad = [float(v) for v in np.unique(dataset.labels) if v not in (-1.0, 1.0)]
        if bad:
            raise ValueError(f"{config.loss_kind} loss needs labels in {{-1, +1}}, found {bad}")
    shuffled = shuffle_once(dataset, config.seed)
    store = make_batches(shuffled, config.batch_size, config.execution)
    model = init_model(config, dataset.n_cols)
    trace = LossTrace()
    for _ in range(config.epochs):
        t0 = time.perf_counter()
        for batch in store.batches:
            model = mgd_step(model, batch, config, counter)
        trace.seconds.append(time.perf_counter() - t0)
        trace.risks.append(empirical_risk(model, dataset, config.loss_kind))
    return model, trace
