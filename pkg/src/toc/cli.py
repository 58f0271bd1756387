"""Command-line front end.

    toc gen-synth      write a synthetic redundant dataset
    toc compress       compress a dataset into a batch store
    toc decompress     expand a batch store back into a dataset file
    toc verify         prove a store losslessly reproduces its source
    toc bench-ratio    compare dense / CSR / compressed byte sizes
    toc bench-kernels  time and count kernels across execution modes
    toc train          run mini-batch gradient descent

Exit codes: 0 success, 1 usage or bad config, 2 unreadable or malformed
data, 3 verification failure.  Benchmark and training reports are
(metric, value, units) tables in CSV or JSON; writing a report to a file
also renders a PNG figure next to it unless --no-figure is given.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels
from .codec import CorruptEncodingError, LogicalEncoding, decode, encode
from .datasets import (
    DataFormatError,
    DatasetDescriptor,
    FORMATS,
    LABEL_KINDS,
    export,
    ingest,
    make_synthetic,
)
from .kernels import (
    KERNEL_KINDS,
    CompressedMatrix,
    OpCounter,
    csr_kernel_cost,
    dense_kernel_cost,
    kernel_cost,
)
from .matrix import (
    DenseMatrix,
    LabeledDataset,
    SparseRowMatrix,
    csr_matmat_left,
    csr_matmat_right,
    csr_matvec,
    csr_vecmat,
    dense_matmat,
    dense_matvec,
    dense_vecmat,
    sparse_to_dense,
)
from .physical import BlockFormatError, serialize_block
from .reports import (
    REPORT_FORMATS,
    ReportRow,
    csr_bytes,
    dense_bytes,
    format_report,
    logical_bytes,
    physical_bytes,
    render_kernel_figure,
    render_ratio_figure,
    render_risk_figure,
    write_report,
)
from .store import load_batch_store, save_batch_store, save_model
from .training import EXECUTION_MODES, TrainConfig, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VERIFY = 3

_LOSS_FLAGS = {"squared": "squared", "logistic": "logistic", "hinge": "hinge", "nn": "nn_mse"}


class VerificationError(Exception):
    """A store does not reproduce its source dataset."""


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; this tool reserves 2
    # for data errors, so remap.
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dataset_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="dataset file to read")
    p.add_argument("--format", choices=FORMATS, default="libsvm", help="dataset file format")
    p.add_argument("--n-cols", type=int, default=None, help="declared column count (libsvm)")
    p.add_argument("--has-header", action="store_true", help="skip the first csv row")


def _report_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--report", choices=REPORT_FORMATS, default="csv", help="report file format")
    p.add_argument("--output", default=None, help="report file; prints to stdout when omitted")
    p.add_argument("--no-figure", action="store_true", help="skip the PNG next to the report")


def _read_dataset(args: argparse.Namespace) -> LabeledDataset:
    descriptor = DatasetDescriptor(
        path=args.input,
        format=args.format,
        n_cols=getattr(args, "n_cols", None),
        has_header=getattr(args, "has_header", False),
    )
    return ingest(descriptor)


def _batch_slices(n_rows: int, batch_size: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + batch_size, n_rows)) for lo in range(0, n_rows, batch_size)]


def _emit_report(rows: list[ReportRow], args: argparse.Namespace) -> Path | None:
    if args.output is None:
        sys.stdout.write(format_report(rows, args.report))
        return None
    out = Path(args.output)
    write_report(rows, out, args.report)
    print(f"wrote {out}")
    return out


def _figure_path(report_path: Path) -> Path:
    return report_path.with_suffix(".png")


def cmd_gen_synth(args: argparse.Namespace) -> int:
    dataset = make_synthetic(
        n_rows=args.rows,
        n_cols=args.cols,
        n_templates=args.templates,
        alphabet_size=args.alphabet,
        density=args.density,
        seed=args.seed,
        label_kind=args.labels,
        noise=args.noise,
    )
    export(args.output, dataset, args.format)
    print(f"wrote {args.output}: {dataset.n_rows} rows, {dataset.n_cols} cols, nnz={dataset.features.nnz}")
    return EXIT_OK


def cmd_compress(args: argparse.Namespace) -> int:
    dataset = _read_dataset(args)
    if dataset.n_rows == 0:
        raise DataFormatError("input dataset has no rows")
    blocks: list[bytes] = []
    labels: list[np.ndarray] = []
    for lo, hi in _batch_slices(dataset.n_rows, args.batch_size):
        piece = SparseRowMatrix.from_rows_unchecked(
            dataset.features.n_cols, dataset.features.rows[lo:hi]
        )
        blocks.append(serialize_block(encode(piece)))
        labels.append(dataset.labels[lo:hi])
    save_batch_store(
        args.output, blocks, labels,
        batch_size=args.batch_size, n_cols=dataset.n_cols, seed=args.seed,
    )
    raw = dense_bytes(dataset.n_rows, dataset.n_cols)
    packed = sum(len(b) for b in blocks)
    print(
        f"wrote {args.output}: {len(blocks)} batches, {dataset.n_rows} rows, "
        f"{packed} block bytes (dense would be {raw})"
    )
    return EXIT_OK


def cmd_decompress(args: argparse.Namespace) -> int:
    store = load_batch_store(args.input)
    rows: list = []
    labels: list[np.ndarray] = []
    for enc, batch_labels in store.batches:
        rows.extend(decode(enc).rows)
        labels.append(batch_labels)
    features = SparseRowMatrix.from_rows_unchecked(store.n_cols, rows)
    dataset = LabeledDataset(
        features=features,
        labels=np.concatenate(labels) if labels else np.zeros(0),
    )
    export(args.output, dataset, args.format)
    print(f"wrote {args.output}: {dataset.n_rows} rows, {dataset.n_cols} cols")
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    dataset = _read_dataset(args)
    store = load_batch_store(args.store)
    if store.n_cols != dataset.n_cols:
        raise VerificationError(
            f"store has {store.n_cols} columns, dataset has {dataset.n_cols}"
        )
    if store.total_rows != dataset.n_rows:
        raise VerificationError(
            f"store holds {store.total_rows} rows, dataset has {dataset.n_rows}"
        )
    row = 0
    for b, (enc, batch_labels) in enumerate(store.batches):
        decoded = decode(enc)
        for i, got in enumerate(decoded.rows):
            want = dataset.features.rows[row]
            if got != want:
                raise VerificationError(f"batch {b}, dataset row {row}: decoded row differs")
            if float(batch_labels[i]) != float(dataset.labels[row]):
                raise VerificationError(f"batch {b}, dataset row {row}: label differs")
            row += 1
        # Determinism check: re-encoding the same rows must reproduce the
        # stored block byte for byte.
        piece = SparseRowMatrix.from_rows_unchecked(dataset.n_cols, decoded.rows)
        if serialize_block(encode(piece)) != serialize_block(enc):
            raise VerificationError(f"batch {b}: re-encoding does not reproduce the stored block")
    print(f"verified {args.store} against {args.input}: {row} rows lossless")
    return EXIT_OK


def cmd_bench_ratio(args: argparse.Namespace) -> int:
    dataset = _read_dataset(args)
    if dataset.n_rows == 0:
        raise DataFormatError("input dataset has no rows")
    batch_sizes = args.batch_size or [dataset.n_rows]
    rows_out: list[ReportRow] = []
    dense_over_toc: list[float] = []
    csr_over_toc: list[float] = []
    for bs in batch_sizes:
        if bs < 1:
            raise ValueError(f"--batch-size must be at least 1, got {bs}")
        totals = {"dense": 0, "csr": 0, "logical": 0, "physical": 0}
        per_batch_dense_ratio: list[float] = []
        per_batch_csr_ratio: list[float] = []
        for lo, hi in _batch_slices(dataset.n_rows, bs):
            piece = SparseRowMatrix.from_rows_unchecked(
                dataset.n_cols, dataset.features.rows[lo:hi]
            )
            enc = encode(piece)
            d = dense_bytes(piece.n_rows, piece.n_cols)
            c = csr_bytes(piece)
            p = physical_bytes(enc)
            totals["dense"] += d
            totals["csr"] += c
            totals["logical"] += logical_bytes(enc)
            totals["physical"] += p
            per_batch_dense_ratio.append(d / p)
            per_batch_csr_ratio.append(c / p)
        tag = f"[batch={bs}]"
        ratio_dense = float(np.mean(per_batch_dense_ratio))
        ratio_csr = float(np.mean(per_batch_csr_ratio))
        rows_out += [
            ReportRow(f"dense_bytes{tag}", totals["dense"], "bytes"),
            ReportRow(f"csr_bytes{tag}", totals["csr"], "bytes"),
            ReportRow(f"toc_logical_bytes{tag}", totals["logical"], "bytes"),
            ReportRow(f"toc_physical_bytes{tag}", totals["physical"], "bytes"),
            ReportRow(f"ratio_dense_over_toc{tag}", ratio_dense, "x"),
            ReportRow(f"ratio_csr_over_toc{tag}", ratio_csr, "x"),
        ]
        dense_over_toc.append(ratio_dense)
        csr_over_toc.append(ratio_csr)
    out = _emit_report(rows_out, args)
    if out is not None and not args.no_figure:
        fig = _figure_path(out)
        render_ratio_figure(batch_sizes, dense_over_toc, csr_over_toc, fig)
        print(f"wrote {fig}")
    return EXIT_OK


def _run_kernel(kind: str, features, vec, mat: DenseMatrix, counter=None):
    if isinstance(features, CompressedMatrix):
        if kind == "matvec":
            return kernels.matvec(features, vec, counter)
        if kind == "vecmat":
            return kernels.vecmat(vec, features, counter)
        if kind == "matmat_right":
            return kernels.matmat_right(features, mat, counter)
        return kernels.matmat_left(mat, features, counter)
    if isinstance(features, DenseMatrix):
        if kind == "matvec":
            return dense_matvec(features, vec)
        if kind == "vecmat":
            return dense_vecmat(vec, features)
        if kind == "matmat_right":
            return dense_matmat(features, mat)
        return dense_matmat(mat, features)
    if kind == "matvec":
        return csr_matvec(features, vec)
    if kind == "vecmat":
        return csr_vecmat(vec, features)
    if kind == "matmat_right":
        return csr_matmat_right(features, mat)
    return csr_matmat_left(mat, features)


def cmd_bench_kernels(args: argparse.Namespace) -> int:
    dataset = _read_dataset(args)
    if dataset.n_rows == 0:
        raise DataFormatError("input dataset has no rows")
    kind = args.kernel
    s = dataset.features
    rng = np.random.default_rng(args.seed)
    width = args.width
    lane_width = width if kind in ("matmat_right", "matmat_left") else 1
    bs = args.batch_size or dataset.n_rows
    if bs < 1:
        raise ValueError(f"--batch-size must be at least 1, got {bs}")
    slices = _batch_slices(dataset.n_rows, bs)
    pieces = [
        SparseRowMatrix.from_rows_unchecked(s.n_cols, s.rows[lo:hi]) for lo, hi in slices
    ]
    compressed = [CompressedMatrix.from_sparse(p) for p in pieces]
    for cm in compressed:
        cm.tree  # build outside the timed region
    dense = [sparse_to_dense(p) for p in pieces]
    # Per-batch operands: the row-sized vector and the left matrix are
    # sliced to follow the batching; column-sized operands are shared.
    col_vec = rng.standard_normal(s.n_cols)
    row_vec = rng.standard_normal(dataset.n_rows)
    right_mat = DenseMatrix(rng.standard_normal((s.n_cols, width)))
    left_mat = rng.standard_normal((width, dataset.n_rows))

    def operands(b: int) -> tuple[np.ndarray, DenseMatrix]:
        lo, hi = slices[b]
        if kind == "matvec":
            return col_vec, right_mat
        if kind == "vecmat":
            return row_vec[lo:hi], right_mat
        if kind == "matmat_right":
            return col_vec, right_mat
        return col_vec, DenseMatrix(left_mat[:, lo:hi])

    reps = {"compressed": compressed, "dense": dense, "csr": pieces}
    rows_out: list[ReportRow] = []
    executions: list[str] = []
    counts: list[int] = []
    times: list[float] = []
    measured = 0
    for name, batches in reps.items():
        ops = [operands(b) for b in range(len(batches))]
        best = float("inf")
        for _ in range(max(1, args.repeats)):
            t0 = time.perf_counter()
            for features, (vec, mat) in zip(batches, ops):
                _run_kernel(kind, features, vec, mat)
            best = min(best, time.perf_counter() - t0)
        if name == "compressed":
            counter = OpCounter()
            for features, (vec, mat) in zip(batches, ops):
                _run_kernel(kind, features, vec, mat, counter)
            measured = counter.multiply_adds
            count = measured
        elif name == "dense":
            count = dense_kernel_cost(dataset.n_rows, s.n_cols, kind, lane_width)
        else:
            count = csr_kernel_cost(s.nnz, kind, lane_width)
        rows_out.append(ReportRow(f"wall_seconds[execution={name}]", best, "s"))
        rows_out.append(ReportRow(f"multiply_adds[execution={name}]", count, "ops"))
        executions.append(name)
        counts.append(count)
        times.append(best)
    predicted = sum(kernel_cost(cm, kind, lane_width) for cm in compressed)
    rows_out.append(ReportRow("predicted_multiply_adds[execution=compressed]", predicted, "ops"))
    rows_out.append(
        ReportRow(
            "compressed_over_dense_ratio",
            counts[0] / counts[1] if counts[1] else float("nan"),
            "x",
        )
    )
    out = _emit_report(rows_out, args)
    if out is not None and not args.no_figure:
        fig = _figure_path(out)
        render_kernel_figure(executions, counts, times, fig)
        print(f"wrote {fig}")
    if measured != predicted:
        raise VerificationError(
            f"measured multiply-adds {measured} != predicted {predicted} for {kind}"
        )
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    dataset = _read_dataset(args)
    try:
        config = TrainConfig(
            loss_kind=_LOSS_FLAGS[args.loss],
            batch_size=args.batch_size,
            learning_rate=args.lr,
            epochs=args.epochs,
            seed=args.seed,
            hidden_units=args.hidden,
            execution=args.execution,
        )
    except ValueError as exc:
        print(f"toc train: bad config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    model, trace = train(dataset, config)
    save_model(args.model_out, model, config.loss_kind)
    rows_out = [
        ReportRow(f"risk[epoch={i + 1}]", risk, "loss")
        for i, risk in enumerate(trace.risks)
    ]
    rows_out += [
        ReportRow(f"seconds[epoch={i + 1}]", sec, "s")
        for i, sec in enumerate(trace.seconds)
    ]
    out = _emit_report(rows_out, args)
    if out is not None and not args.no_figure:
        fig = _figure_path(out)
        render_risk_figure({f"{args.loss} ({args.execution})": trace.risks}, fig)
        print(f"wrote {fig}")
    print(f"wrote {args.model_out}: final risk {trace.risks[-1]:.6g}")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="toc", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="write a synthetic redundant dataset")
    p.add_argument("--output", required=True)
    p.add_argument("--format", choices=FORMATS, default="libsvm")
    p.add_argument("--rows", type=int, default=640)
    p.add_argument("--cols", type=int, default=50)
    p.add_argument("--templates", type=int, default=10)
    p.add_argument("--alphabet", type=int, default=16)
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--labels", choices=LABEL_KINDS, default="linear")
    p.add_argument("--noise", type=float, default=0.0)
    p.set_defaults(func=cmd_gen_synth)

    p = sub.add_parser("compress", help="compress a dataset into a batch store")
    _dataset_args(p)
    p.add_argument("--output", required=True, help="batch store to write")
    p.add_argument("--batch-size", type=int, default=256)
    p.add_argument("--seed", type=int, default=0, help="recorded in the store header")
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("decompress", help="expand a batch store into a dataset file")
    p.add_argument("--input", required=True, help="batch store to read")
    p.add_argument("--output", required=True, help="dataset file to write")
    p.add_argument("--format", choices=FORMATS, default="libsvm")
    p.set_defaults(func=cmd_decompress)

    p = sub.add_parser("verify", help="check a store against its source dataset")
    _dataset_args(p)
    p.add_argument("--store", required=True, help="batch store to verify")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench-ratio", help="compare dense / CSR / compressed sizes")
    _dataset_args(p)
    p.add_argument(
        "--batch-size", type=int, action="append", default=None,
        help="repeatable; defaults to one whole-dataset batch",
    )
    _report_args(p)
    p.set_defaults(func=cmd_bench_ratio)

    p = sub.add_parser("bench-kernels", help="time and count kernels per execution mode")
    _dataset_args(p)
    p.add_argument("--kernel", choices=KERNEL_KINDS, default="matvec")
    p.add_argument(
        "--batch-size", type=int, default=None,
        help="rows per compressed batch; defaults to one whole-dataset batch",
    )
    p.add_argument("--width", type=int, default=4, help="free dimension for matmat kernels")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    _report_args(p)
    p.set_defaults(func=cmd_bench_kernels)

    p = sub.add_parser("train", help="mini-batch gradient descent")
    _dataset_args(p)
    p.add_argument("--loss", choices=sorted(_LOSS_FLAGS), default="squared")
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--hidden", type=int, default=16)
    p.add_argument("--execution", choices=EXECUTION_MODES, default="compressed")
    p.add_argument("--model-out", default="model.tocm", help="trained model file")
    _report_args(p)
    p.set_defaults(func=cmd_train)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except VerificationError as exc:
        print(f"toc {args.command}: verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (DataFormatError, BlockFormatError, CorruptEncodingError) as exc:
        print(f"toc {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"toc {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"toc {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
