"""
Unit tests for dataset ingestion and generators
"""

import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from afnet.data import (
    IMAGE,
    Dataset,
    load_csv,
    load_pgm_dir,
    make_blobs,
    make_dying_relu_stress,
    min_max_normalize,
)
from afnet.errors import DatasetError, ValidationError


def write_pgm(path: Path, pixels: np.ndarray, magic: bytes = b"P5", maxval: int = 255):
    h, w = pixels.shape
    header = magic + f"\n# test image\n{w} {h}\n{maxval}\n".encode("ascii")
    path.write_bytes(header + pixels.astype(np.uint8).tobytes())


class TestDatasetType(unittest.TestCase):
    """Test Dataset invariants"""

    def test_label_range(self):
        with self.assertRaises(ValidationError):
            Dataset(np.zeros((2, 2)), [0, 2], ["a", "b"])

    def test_rank_per_kind(self):
        with self.assertRaises(ValidationError):
            Dataset(np.zeros((2, 2)), [0, 1], ["a", "b"], IMAGE)

    def test_finite_features(self):
        with self.assertRaises(ValidationError):
            Dataset(np.array([[np.inf], [0.0]]), [0, 1], ["a", "b"])

    def test_subset(self):
        data = make_blobs(3, n_classes=2)
        part = data.subset([0, 5])
        self.assertEqual(len(part), 2)
        np.testing.assert_array_equal(part.labels, [0, 1])


class TestLoadCsv(unittest.TestCase):
    """Test CSV ingestion"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, text: str) -> Path:
        path = self.dir / "data.csv"
        path.write_text(text, encoding="utf-8")
        return path

    def test_first_appearance_ids(self):
        data = load_csv(self._write("x,y,label\n1,2,a\n3,4,b\n"), "label")
        self.assertEqual(data.class_names, ["a", "b"])
        np.testing.assert_array_equal(data.labels, [0, 1])

    def test_normalized_to_unit_range(self):
        data = load_csv(self._write("x,y,label\n1,10,b\n3,20,a\n2,40,b\n"), "label")
        np.testing.assert_allclose(data.features[:, 0], [0.0, 1.0, 0.5])
        self.assertTrue(np.all((data.features >= 0) & (data.features <= 1)))
        self.assertEqual(data.class_names, ["b", "a"])

    def test_constant_column_is_zero(self):
        data = load_csv(self._write("x,c,label\n1,7,a\n2,7,b\n"), "label")
        np.testing.assert_array_equal(data.features[:, 1], [0.0, 0.0])

    def test_malformed_cell_cites_row(self):
        rows = "x,label\n1,a\n2,b\n3,a\n1.2.3,b\n"
        with self.assertRaises(DatasetError) as ctx:
            load_csv(self._write(rows), "label")
        self.assertEqual(ctx.exception.row, 5)
        self.assertEqual(ctx.exception.column, "x")
        self.assertIn("row 5", str(ctx.exception))
        self.assertIn("1.2.3", str(ctx.exception))

    def test_missing_label_column(self):
        with self.assertRaises(DatasetError) as ctx:
            load_csv(self._write("x,y\n1,2\n"), "label")
        self.assertIn("label", str(ctx.exception))

    def test_empty_file(self):
        with self.assertRaises(DatasetError):
            load_csv(self._write(""), "label")

    def test_header_only(self):
        with self.assertRaises(DatasetError):
            load_csv(self._write("x,label\n"), "label")

    def test_selected_feature_columns(self):
        data = load_csv(self._write("x,y,label\n1,2,a\n3,4,b\n"), "label", feature_columns=["y"])
        self.assertEqual(data.input_shape, (1,))
        self.assertEqual(data.feature_names, ["y"])

    def test_round_trip(self):
        original = load_csv(self._write("x,y,label\n0.5,2,cat\n1.5,4,dog\n1,3,cat\n"), "label")
        copy_path = self.dir / "copy.csv"
        original.to_csv(copy_path)
        reloaded = load_csv(copy_path, "label")

        np.testing.assert_array_equal(reloaded.labels, original.labels)
        self.assertEqual(reloaded.class_names, original.class_names)
        np.testing.assert_allclose(reloaded.features, original.features, atol=1e-6)


class TestLoadPgm(unittest.TestCase):
    """Test PGM directory ingestion"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name) / "images"
        rng = np.random.default_rng(0)
        for name in ("normal", "covid"):
            (self.root / name).mkdir(parents=True)
            for i in range(3):
                write_pgm(self.root / name / f"{i}.pgm", rng.integers(0, 255, (8, 8)))

    def tearDown(self):
        self.tmp.cleanup()

    def test_shape_and_class_order(self):
        data = load_pgm_dir(self.root)
        self.assertEqual(data.features.shape, (6, 8, 8, 1))
        self.assertEqual(data.class_names, ["covid", "normal"])
        np.testing.assert_array_equal(data.labels, [0, 0, 0, 1, 1, 1])

    def test_full_intensity_is_one(self):
        pixels = np.zeros((8, 8))
        pixels[0, 0] = 255
        write_pgm(self.root / "covid" / "0.pgm", pixels)
        data = load_pgm_dir(self.root)
        self.assertEqual(data.features[0, 0, 0, 0], 1.0)
        self.assertEqual(data.features[0, 1, 1, 0], 0.0)

    def test_ascii_pgm_rejected(self):
        bad = self.root / "normal" / "9.pgm"
        bad.write_bytes(b"P2\n2 2\n255\n0 0 0 0\n")
        with self.assertRaises(DatasetError) as ctx:
            load_pgm_dir(self.root)
        self.assertIn("9.pgm", str(ctx.exception))

    def test_mixed_dimensions_rejected(self):
        write_pgm(self.root / "normal" / "9.pgm", np.zeros((4, 8)))
        with self.assertRaises(DatasetError) as ctx:
            load_pgm_dir(self.root)
        self.assertIn("9.pgm", str(ctx.exception))

    def test_truncated_rejected(self):
        path = self.root / "normal" / "9.pgm"
        path.write_bytes(b"P5\n8 8\n255\n" + bytes(10))
        with self.assertRaises(DatasetError) as ctx:
            load_pgm_dir(self.root)
        self.assertIn("9.pgm", str(ctx.exception))

    def test_maxval_must_be_255(self):
        write_pgm(self.root / "normal" / "9.pgm", np.zeros((8, 8)), maxval=100)
        with self.assertRaises(DatasetError):
            load_pgm_dir(self.root)


class TestGenerators(unittest.TestCase):
    """Test synthetic datasets"""

    def test_blobs_deterministic(self):
        a = make_blobs(5, n_classes=3, dim=4, seed=1)
        b = make_blobs(5, n_classes=3, dim=4, seed=1)
        np.testing.assert_array_equal(a.features, b.features)
        self.assertEqual(a.features.shape, (15, 4))
        np.testing.assert_array_equal(a.class_counts(), [5, 5, 5])

    def test_blobs_separated(self):
        data = make_blobs(200, n_classes=2, dim=2, separation=10.0, seed=0)
        projection = data.features.sum(axis=1) / np.sqrt(2)
        threshold = 5.0
        predicted = (projection > threshold).astype(int)
        self.assertGreaterEqual(float((predicted == data.labels).mean()), 0.99)

    def test_stress_features_below_minus_one(self):
        data = make_dying_relu_stress(40, dim=3, seed=2)
        self.assertTrue(np.all(data.features <= -1.0))
        self.assertEqual(data.n_classes, 2)
        np.testing.assert_array_equal(data.class_counts(), [20, 20])

    def test_stress_deterministic(self):
        np.testing.assert_array_equal(
            make_dying_relu_stress(10, seed=4).features,
            make_dying_relu_stress(10, seed=4).features,
        )

    def test_stress_preconditions(self):
        with self.assertRaises(ValidationError):
            make_dying_relu_stress(1)

    def test_min_max_normalize(self):
        out = min_max_normalize(np.array([[0.0, 5.0], [10.0, 5.0]]))
        np.testing.assert_array_equal(out, [[0.0, 0.0], [1.0, 0.0]])


if __name__ == "__main__":
    unittest.main()
