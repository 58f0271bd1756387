"""File ingestion, export round trips, and the synthetic generator."""

from __future__ import annotations

import numpy as np
import pytest

from toc.datasets import (
    DataFormatError,
    DatasetDescriptor,
    export,
    ingest,
    load_csv,
    load_libsvm,
    make_synthetic,
    save_csv,
    save_libsvm,
)
from toc.matrix import LabeledDataset, SparseRowMatrix


class TestLoadLibsvm:
    def test_basic_line(self, tmp_path):
        p = tmp_path / "d.libsvm"
        p.write_text("1 1:0.5 3:2.0\n")
        ds = load_libsvm(p)
        assert ds.labels.tolist() == [1.0]
        assert ds.features.n_cols == 3
        assert ds.features.rows == [[(0, 0.5), (2, 2.0)]]

    def test_label_only_line(self, tmp_path):
        p = tmp_path / "d.libsvm"
        p.write_text("-1\n+1 2:4.0\n")
        ds = load_libsvm(p)
        assert ds.labels.tolist() == [-1.0, 1.0]
        assert ds.features.rows == [[], [(1, 4.0)]]

    def test_comments_and_blank_lines(self, tmp_path):
        p = tmp_path / "d.libsvm"
        p.write_text("# heading\n\n1 1:2.0 # trailing comment\n")
        ds = load_libsvm(p)
        assert ds.features.rows == [[(0, 2.0)]]

    def test_explicit_zero_dropped(self, tmp_path):
        p = tmp_path / "d.libsvm"
        p.write_text("1 1:0.0 2:3.0\n")
        ds = load_libsvm(p)
        assert ds.features.rows == [[(1, 3.0)]]

    def test_n_cols_override(self, tmp_path):
        p = tmp_path / "d.libsvm"
        p.write_text("1 2:5.0\n")
        assert load_libsvm(p, n_cols=10).features.n_cols == 10
        with pytest.raises(DataFormatError, match="exceeds"):
            load_libsvm(p, n_cols=1)

    @pytest.mark.parametrize(
        "line,match",
        [
            ("1 3:x", "line 1: feature value"),
            ("abc 1:2.0", "line 1: label"),
            ("1 1:inf", "not finite"),
            ("1 0:2.0", "must be >= 1"),
            ("1 foo:2.0", "not an integer"),
            ("1 1:2.0 1:3.0", "not ascending"),
            ("1 3:2.0 2:1.0", "not ascending"),
            ("1 nolon", "expected idx:val"),
        ],
    )
    def test_parse_errors_name_the_line(self, tmp_path, line, match):
        p = tmp_path / "d.libsvm"
        p.write_text(line + "\n")
        with pytest.raises(DataFormatError, match=match):
            load_libsvm(p)

    def test_error_reports_later_lines(self, tmp_path):
        p = tmp_path / "d.libsvm"
        p.write_text("1 1:2.0\n1 1:2.0\n1 badline\n")
        with pytest.raises(DataFormatError, match="line 3"):
            load_libsvm(p)


class TestLoadCsv:
    def test_basic(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1.0,0.0,2.5,7.0\n0.0,3.0,0.0,-1.0\n")
        ds = load_csv(p)
        assert ds.features.n_cols == 3
        assert ds.features.rows == [[(0, 1.0), (2, 2.5)], [(1, 3.0)]]
        assert ds.labels.tolist() == [7.0, -1.0]

    def test_header_skipped(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("x0,x1,label\n1.0,2.0,3.0\n")
        ds = load_csv(p, has_header=True)
        assert ds.features.rows == [[(0, 1.0), (1, 2.0)]]
        with pytest.raises(DataFormatError, match="line 1"):
            load_csv(p, has_header=False)

    def test_ragged_rows_rejected(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1.0,2.0,3.0\n1.0,2.0\n")
        with pytest.raises(DataFormatError, match="line 2: 1 feature columns, expected 2"):
            load_csv(p)

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("")
        with pytest.raises(DataFormatError, match="no data rows"):
            load_csv(p)
        p.write_text("x0,label\n")
        with pytest.raises(DataFormatError, match="no data rows"):
            load_csv(p, has_header=True)

    def test_bad_value_names_column(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("1.0,oops,3.0\n")
        with pytest.raises(DataFormatError, match="column 1"):
            load_csv(p)


class TestIngestExport:
    def sample(self) -> LabeledDataset:
        rows = [[(0, 0.1), (3, -2.75)], [], [(1, 1e-17), (2, 123456.789)]]
        return LabeledDataset(
            features=SparseRowMatrix(4, rows), labels=np.array([1.5, -0.25, 3.0])
        )

    @pytest.mark.parametrize("fmt", ["libsvm", "csv"])
    def test_roundtrip_is_bit_exact(self, tmp_path, fmt):
        ds = self.sample()
        p = tmp_path / f"d.{fmt}"
        export(p, ds, fmt)
        back = ingest(DatasetDescriptor(path=p, format=fmt))
        assert back.labels.tolist() == ds.labels.tolist()
        assert back.features.rows == ds.features.rows
        # libsvm keeps the sparse width; csv always rebuilds it
        if fmt == "csv":
            assert back.features.n_cols == ds.features.n_cols

    def test_libsvm_roundtrip_keeps_width_via_override(self, tmp_path):
        ds = LabeledDataset(
            features=SparseRowMatrix(6, [[(1, 2.0)]]), labels=np.array([1.0])
        )
        p = tmp_path / "d.libsvm"
        save_libsvm(p, ds)
        back = ingest(DatasetDescriptor(path=p, format="libsvm", n_cols=6))
        assert back.features.n_cols == 6

    def test_csv_header_roundtrip(self, tmp_path):
        ds = self.sample()
        p = tmp_path / "d.csv"
        save_csv(p, ds, header=True)
        assert p.read_text().splitlines()[0] == "x0,x1,x2,x3,label"
        back = load_csv(p, has_header=True)
        assert back.features.rows == ds.features.rows

    def test_libsvm_uses_one_based_indexes(self, tmp_path):
        p = tmp_path / "d.libsvm"
        save_libsvm(
            p,
            LabeledDataset(features=SparseRowMatrix(2, [[(0, 3.0)]]), labels=np.array([1.0])),
        )
        assert p.read_text() == "1.0 1:3.0\n"

    def test_export_rejects_unknown_format(self, tmp_path):
        with pytest.raises(ValueError, match="format"):
            export(tmp_path / "d.bin", self.sample(), "parquet")

    def test_descriptor_validation(self):
        with pytest.raises(ValueError, match="format"):
            DatasetDescriptor(path="x", format="parquet")
        with pytest.raises(ValueError, match="n_cols"):
            DatasetDescriptor(path="x", n_cols=-1)


class TestMakeSynthetic:
    def test_shapes_and_determinism(self):
        a = make_synthetic(100, 20, 5, seed=3)
        b = make_synthetic(100, 20, 5, seed=3)
        assert a.n_rows == 100 and a.features.n_cols == 20
        assert a.features.rows == b.features.rows
        assert a.labels.tolist() == b.labels.tolist()
        c = make_synthetic(100, 20, 5, seed=4)
        assert a.features.rows != c.features.rows

    def test_rows_cycle_templates(self):
        ds = make_synthetic(10, 8, 3, seed=1)
        rows = ds.features.rows
        for i in range(10):
            assert rows[i] == rows[i % 3]
        assert len({tuple(r) for r in rows}) <= 3

    def test_alphabet_and_density(self):
        ds = make_synthetic(20, 10, 4, alphabet_size=5, density=0.5, seed=2)
        for row in ds.features.rows:
            assert len(row) == 5
            for col, val in row:
                assert 0 <= col < 10
                assert val in {1.0, 2.0, 3.0, 4.0, 5.0}
            assert [c for c, _ in row] == sorted({c for c, _ in row})

    def test_sign_labels(self):
        ds = make_synthetic(50, 10, 5, label_kind="sign", seed=7)
        assert set(ds.labels.tolist()) <= {-1.0, 1.0}

    def test_noise_perturbs_labels(self):
        clean = make_synthetic(30, 10, 5, seed=9)
        noisy = make_synthetic(30, 10, 5, seed=9, noise=0.5)
        assert clean.features.rows == noisy.features.rows
        assert clean.labels.tolist() != noisy.labels.tolist()

    def test_validation(self):
        with pytest.raises(ValueError, match="row"):
            make_synthetic(0, 5, 2)
        with pytest.raises(ValueError, match="n_templates"):
            make_synthetic(5, 5, 0)
        with pytest.raises(ValueError, match="alphabet_size"):
            make_synthetic(5, 5, 2, alphabet_size=0)
        with pytest.raises(ValueError, match="density"):
            make_synthetic(5, 5, 2, density=0.0)
        with pytest.raises(ValueError, match="density"):
            make_synthetic(5, 5, 2, density=1.5)
        with pytest.raises(ValueError, match="label_kind"):
            make_synthetic(5, 5, 2, label_kind="onehot")
