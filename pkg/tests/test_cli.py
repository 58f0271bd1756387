"""End-to-end command tests driving main(argv) in process.

Exit-code contract under test: 0 success, 1 usage or bad config, 2
unreadable or malformed data, 3 verification failure.
"""

from __future__ import annotations

import csv
import json
import struct

import numpy as np
import pytest

from toc.cli import main
from toc.datasets import load_libsvm
from toc.store import load_model
from toc.training import GlmModel


@pytest.fixture
def synth(tmp_path):
    """A small redundant dataset on disk, plus its directory."""
    path = tmp_path / "data.libsvm"
    rc = main(
        [
            "gen-synth", "--output", str(path), "--rows", "120", "--cols", "12",
            "--templates", "4", "--alphabet", "8", "--density", "0.75", "--seed", "3",
        ]
    )
    assert rc == 0
    return path


def read_report(path) -> dict[str, float]:
    with open(path, newline="") as fh:
        return {row["metric"]: float(row["value"]) for row in csv.DictReader(fh)}


class TestGenSynth:
    def test_writes_loadable_file(self, synth):
        ds = load_libsvm(synth)
        assert ds.n_rows == 120
        assert ds.features.n_cols <= 12

    def test_csv_format(self, tmp_path):
        path = tmp_path / "d.csv"
        rc = main(["gen-synth", "--output", str(path), "--rows", "8", "--cols", "5",
                   "--templates", "2", "--format", "csv"])
        assert rc == 0
        assert len(path.read_text().splitlines()) == 8

    def test_bad_params_exit_usage(self, tmp_path):
        rc = main(["gen-synth", "--output", str(tmp_path / "d"), "--rows", "0"])
        assert rc == 1

    def test_unwritable_output_exits_data(self, tmp_path):
        rc = main(["gen-synth", "--output", str(tmp_path / "nodir" / "d.libsvm")])
        assert rc == 2


class TestCompressVerifyDecompress:
    def test_full_cycle_is_lossless(self, synth, tmp_path, capsys):
        store = tmp_path / "data.tocs"
        assert main(["compress", "--input", str(synth), "--output", str(store),
                     "--batch-size", "32"]) == 0
        assert main(["verify", "--input", str(synth), "--store", str(store)]) == 0
        assert "120 rows lossless" in capsys.readouterr().out

        out = tmp_path / "back.libsvm"
        assert main(["decompress", "--input", str(store), "--output", str(out)]) == 0
        assert out.read_bytes() == synth.read_bytes()

    def test_verify_catches_tampered_label(self, synth, tmp_path):
        store = tmp_path / "data.tocs"
        main(["compress", "--input", str(synth), "--output", str(store), "--batch-size", "32"])
        data = bytearray(store.read_bytes())
        # flip one byte in the first batch's label section: skip the store
        # header (29), the block length word (4), the block, then the label
        # count word (4)
        (block_len,) = struct.unpack_from("<I", data, 29)
        data[29 + 4 + block_len + 4] ^= 0xFF
        store.write_bytes(bytes(data))
        rc = main(["verify", "--input", str(synth), "--store", str(store)])
        assert rc == 3

    def test_verify_catches_wrong_dataset(self, synth, tmp_path):
        store = tmp_path / "data.tocs"
        main(["compress", "--input", str(synth), "--output", str(store), "--batch-size", "32"])
        other = tmp_path / "other.libsvm"
        main(["gen-synth", "--output", str(other), "--rows", "120", "--cols", "12",
              "--templates", "4", "--alphabet", "8", "--density", "0.75", "--seed", "4"])
        assert main(["verify", "--input", str(other), "--store", str(store)]) == 3

    def test_truncated_store_exits_data(self, synth, tmp_path):
        store = tmp_path / "data.tocs"
        main(["compress", "--input", str(synth), "--output", str(store), "--batch-size", "32"])
        store.write_bytes(store.read_bytes()[:40])
        assert main(["decompress", "--input", str(store), "--output", str(tmp_path / "x")]) == 2
        assert main(["verify", "--input", str(synth), "--store", str(store)]) == 2

    def test_missing_input_exits_data(self, tmp_path):
        rc = main(["compress", "--input", str(tmp_path / "absent.libsvm"),
                   "--output", str(tmp_path / "s.tocs")])
        assert rc == 2

    def test_malformed_input_exits_data(self, tmp_path):
        bad = tmp_path / "bad.libsvm"
        bad.write_text("1 2:oops\n")
        rc = main(["compress", "--input", str(bad), "--output", str(tmp_path / "s.tocs")])
        assert rc == 2


class TestBenchRatio:
    def test_report_and_figure(self, synth, tmp_path):
        report = tmp_path / "ratio.csv"
        rc = main(["bench-ratio", "--input", str(synth), "--batch-size", "30",
                   "--batch-size", "60", "--output", str(report)])
        assert rc == 0
        metrics = read_report(report)
        assert metrics["dense_bytes[batch=30]"] == 120 * 12 * 8
        assert metrics["ratio_dense_over_toc[batch=30]"] > 1.0
        assert metrics["toc_physical_bytes[batch=60]"] < metrics["csr_bytes[batch=60]"]
        assert (tmp_path / "ratio.png").exists()

    def test_no_figure_flag(self, synth, tmp_path):
        report = tmp_path / "ratio.csv"
        rc = main(["bench-ratio", "--input", str(synth), "--output", str(report), "--no-figure"])
        assert rc == 0
        assert report.exists()
        assert not (tmp_path / "ratio.png").exists()

    def test_stdout_json(self, synth, capsys):
        capsys.readouterr()  # drop the fixture's gen-synth chatter
        rc = main(["bench-ratio", "--input", str(synth), "--report", "json"])
        assert rc == 0
        data = json.loads(capsys.readouterr().out)
        metrics = {row["metric"]: row["value"] for row in data}
        assert "ratio_dense_over_toc[batch=120]" in metrics

    def test_bad_batch_size_exits_usage(self, synth):
        assert main(["bench-ratio", "--input", str(synth), "--batch-size", "0"]) == 1


class TestBenchKernels:
    @pytest.mark.parametrize("kernel", ["matvec", "vecmat", "matmat_right", "matmat_left"])
    def test_measured_count_matches_prediction(self, synth, tmp_path, kernel):
        report = tmp_path / f"{kernel}.csv"
        rc = main(["bench-kernels", "--input", str(synth), "--kernel", kernel,
                   "--width", "3", "--repeats", "1", "--output", str(report)])
        assert rc == 0
        metrics = read_report(report)
        assert (
            metrics["multiply_adds[execution=compressed]"]
            == metrics["predicted_multiply_adds[execution=compressed]"]
        )
        assert metrics["multiply_adds[execution=dense]"] > 0
        assert (tmp_path / f"{kernel}.png").exists()

    def test_batched_run_counts_add_up(self, synth, tmp_path):
        whole = tmp_path / "whole.csv"
        split = tmp_path / "split.csv"
        main(["bench-kernels", "--input", str(synth), "--repeats", "1",
              "--output", str(whole), "--no-figure"])
        rc = main(["bench-kernels", "--input", str(synth), "--repeats", "1",
                   "--batch-size", "25", "--output", str(split), "--no-figure"])
        assert rc == 0
        # dense work does not depend on batching; compressed work does
        assert (
            read_report(whole)["multiply_adds[execution=dense]"]
            == read_report(split)["multiply_adds[execution=dense]"]
        )

    def test_compressed_beats_dense_on_redundant_data(self, synth, capsys):
        capsys.readouterr()  # drop the fixture's gen-synth chatter
        rc = main(["bench-kernels", "--input", str(synth), "--repeats", "1"])
        assert rc == 0
        data = read_csv_stdout(capsys)
        assert data["compressed_over_dense_ratio"] < 1.0


def read_csv_stdout(capsys) -> dict[str, float]:
    lines = capsys.readouterr().out.splitlines()
    return {row["metric"]: float(row["value"]) for row in csv.DictReader(lines)}


class TestTrain:
    def test_trains_and_saves_model(self, synth, tmp_path):
        report = tmp_path / "train.csv"
        model_path = tmp_path / "model.tocm"
        rc = main(["train", "--input", str(synth), "--loss", "squared",
                   "--batch-size", "30", "--lr", "1e-4", "--epochs", "3",
                   "--model-out", str(model_path), "--output", str(report)])
        assert rc == 0
        model, loss_kind = load_model(model_path)
        assert loss_kind == "squared"
        assert isinstance(model, GlmModel)
        metrics = read_report(report)
        assert metrics["risk[epoch=3]"] <= metrics["risk[epoch=1]"]
        assert (tmp_path / "train.png").exists()

    def test_execution_modes_agree(self, synth, tmp_path):
        risks = {}
        for mode in ("compressed", "dense", "csr"):
            report = tmp_path / f"{mode}.csv"
            rc = main(["train", "--input", str(synth), "--lr", "1e-4", "--epochs", "2",
                       "--batch-size", "30", "--execution", mode, "--no-figure",
                       "--model-out", str(tmp_path / f"{mode}.tocm"),
                       "--output", str(report)])
            assert rc == 0
            risks[mode] = read_report(report)["risk[epoch=2]"]
        assert risks["compressed"] == pytest.approx(risks["dense"], abs=1e-9)
        assert risks["compressed"] == pytest.approx(risks["csr"], abs=1e-9)

    def test_bad_config_exits_usage(self, synth, tmp_path, capsys):
        rc = main(["train", "--input", str(synth), "--epochs", "0",
                   "--model-out", str(tmp_path / "m.tocm")])
        assert rc == 1
        assert "bad config" in capsys.readouterr().err

    def test_wrong_labels_exit_usage(self, synth, tmp_path):
        # synthetic labels are linear scores, not in {-1, +1}
        rc = main(["train", "--input", str(synth), "--loss", "logistic",
                   "--model-out", str(tmp_path / "m.tocm")])
        assert rc == 1

    def test_nn_loss_on_sign_labels(self, tmp_path):
        data = tmp_path / "sign.libsvm"
        main(["gen-synth", "--output", str(data), "--rows", "60", "--cols", "10",
              "--templates", "3", "--labels", "sign", "--seed", "5"])
        model_path = tmp_path / "nn.tocm"
        rc = main(["train", "--input", str(data), "--loss", "nn", "--hidden", "4",
                   "--lr", "0.01", "--epochs", "2", "--batch-size", "20",
                   "--model-out", str(model_path), "--no-figure"])
        assert rc == 0
        _, loss_kind = load_model(model_path)
        assert loss_kind == "nn_mse"


class TestUsageErrors:
    def test_unknown_command_exits_usage(self):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 1

    def test_missing_required_flag_exits_usage(self):
        with pytest.raises(SystemExit) as exc:
            main(["compress"])
        assert exc.value.code == 1

    def test_no_command_exits_usage(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 1
