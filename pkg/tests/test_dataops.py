"""
Test suite for dataset construction and preprocessing.
"""

import unittest
import tempfile
import os
import sys
import shutil

import numpy as np

# Add the parent directory to the path so we can import privrecourse
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from privrecourse import (
    DataError, FeatureMatrix, ParameterError, fit_preprocessor,
    generate_synthetic, load_csv, preprocess, split
)
from privrecourse.dataops import load_query_csv, partition, synthetic_vertices


class TestFeatureMatrix(unittest.TestCase):
    """Test FeatureMatrix validation."""

    def test_default_names(self):
        """Test feature names default to x0..x{d-1}."""
        data = FeatureMatrix(np.zeros((2, 3)), [0, 1])
        self.assertEqual(data.feature_names, ["x0", "x1", "x2"])
        self.assertEqual((data.n, data.d), (2, 3))

    def test_rejects_bad_labels(self):
        """Test non-binary labels raise DataError."""
        with self.assertRaises(DataError):
            FeatureMatrix(np.zeros((2, 1)), [0, 2])

    def test_rejects_nan(self):
        """Test NaN entries raise DataError."""
        with self.assertRaises(DataError):
            FeatureMatrix(np.array([[np.nan], [1.0]]), [0, 1])

    def test_rejects_label_count_mismatch(self):
        """Test label vector length must match rows."""
        with self.assertRaises(DataError):
            FeatureMatrix(np.zeros((3, 1)), [0, 1])

    def test_rejects_fractional_labels(self):
        """Test labels like 0.9 and 1.7 are refused rather than truncated."""
        with self.assertRaises(DataError):
            FeatureMatrix(np.eye(2), [0.9, 1.7])

    def test_rejects_single_row(self):
        """Test a one-row dataset raises DataError."""
        with self.assertRaises(DataError):
            FeatureMatrix(np.zeros((1, 2)), [1])


class TestSynthetic(unittest.TestCase):
    """Test synthetic hypercube-vertex data."""

    def test_shapes_and_balance(self):
        """Test d=2, n=4 gives 2 points per class on distinct vertices."""
        data = generate_synthetic(2, 4, 7)
        self.assertEqual(data.rows.shape, (4, 2))
        self.assertEqual(int(data.labels.sum()), 2)
        v0, v1 = synthetic_vertices(2, 7)
        self.assertFalse(np.array_equal(v0, v1))
        self.assertTrue(np.isin(np.concatenate([v0, v1]), (0, 1)).all())

    def test_class_means_near_vertices(self):
        """Test per-class means lie within 0.1 of the generating vertices."""
        data = generate_synthetic(100, 5000, 3)
        v0, v1 = synthetic_vertices(100, 3)
        mean0 = data.rows[data.labels == 0].mean(axis=0)
        mean1 = data.rows[data.labels == 1].mean(axis=0)
        self.assertLess(np.max(np.abs(mean0 - v0)), 0.1)
        self.assertLess(np.max(np.abs(mean1 - v1)), 0.1)

    def test_degenerate_size(self):
        """Test d=1, n=2 gives one point per class."""
        data = generate_synthetic(1, 2, 0)
        self.assertEqual(sorted(data.labels.tolist()), [0, 1])

    def test_reproducible(self):
        """Test the same seed reproduces the data bit for bit."""
        a = generate_synthetic(5, 20, 11)
        b = generate_synthetic(5, 20, 11)
        np.testing.assert_array_equal(a.rows, b.rows)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_invalid_arguments(self):
        """Test odd n and d=0 raise ParameterError."""
        with self.assertRaises(ParameterError):
            generate_synthetic(2, 5, 0)
        with self.assertRaises(ParameterError):
            generate_synthetic(0, 4, 0)


class TestLoadCsv(unittest.TestCase):
    """Test CSV ingestion."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        """Clean up after tests."""
        shutil.rmtree(self.temp_dir, ignore_errors=True)

    def write(self, name, text):
        path = os.path.join(self.temp_dir, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path

    def test_basic(self):
        """Test a 3-row file with a yes/no label column."""
        path = self.write("a.csv", "a,b,y\n1,2,yes\n3,4,no\n5,6,yes\n")
        data = load_csv(path, "y", "yes")
        self.assertEqual(data.rows.shape, (3, 2))
        self.assertEqual(data.labels.tolist(), [1, 0, 1])
        self.assertEqual(data.feature_names, ["a", "b"])

    def test_three_labels(self):
        """Test a label column with three values is rejected."""
        path = self.write("b.csv", "a,y\n1,x\n2,y\n3,z\n")
        with self.assertRaises(DataError):
            load_csv(path, "y", "x")

    def test_empty_file(self):
        """Test an empty file is rejected."""
        with self.assertRaises(DataError):
            load_csv(self.write("c.csv", ""), "y", "yes")

    def test_missing_file_and_column(self):
        """Test missing file and missing label column are rejected."""
        with self.assertRaises(DataError):
            load_csv(os.path.join(self.temp_dir, "nope.csv"), "y", "yes")
        with self.assertRaises(DataError):
            load_csv(self.write("d.csv", "a,b\n1,2\n"), "y", "yes")

    def test_unparseable_rows_dropped(self):
        """Test rows with unparseable numerics are rejected."""
        path = self.write("e.csv", "a,y\n1,yes\nabc,no\n3,no\n")
        data = load_csv(path, "y", "yes")
        self.assertEqual(data.rows[:, 0].tolist(), [1.0, 3.0])

    def test_query_file(self):
        """Test query rows are read by feature name, extra columns ignored."""
        path = self.write("q.csv", "b,a,note\n2,1,x\n4,3,y\n")
        rows = load_query_csv(path, ["a", "b"])
        np.testing.assert_array_equal(rows, [[1.0, 2.0], [3.0, 4.0]])
        with self.assertRaises(DataError):
            load_query_csv(path, ["a", "c"])


class TestPreprocess(unittest.TestCase):
    """Test the decorrelate / standardize / normalize pipeline."""

    def test_identical_columns(self):
        """Test the second of two identical columns is dropped."""
        X = np.array([[1.0, 1.0, 0.0], [2.0, 2.0, 1.0], [3.0, 3.0, 0.0]])
        data = preprocess(FeatureMatrix(X, [0, 1, 0]), 0.95)
        self.assertEqual(data.feature_names, ["x0", "x2"])

    def test_single_column_values(self):
        """Test {1,2,3} maps to {-1/sqrt(2), 0, 1/sqrt(2)}."""
        data = preprocess(FeatureMatrix([[1.0], [2.0], [3.0]], [0, 1, 0]))
        np.testing.assert_allclose(data.rows[:, 0], [-1 / np.sqrt(2), 0.0, 1 / np.sqrt(2)], atol=1e-12)

    def test_symmetric_column(self):
        """Test (-1, 1) maps to (-1/sqrt(2), 1/sqrt(2))."""
        data = preprocess(FeatureMatrix([[-1.0], [1.0]], [0, 1]))
        np.testing.assert_allclose(data.rows[:, 0], [-1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-12)

    def test_unit_norm_and_idempotent(self):
        """Test columns have unit norm and a second pass changes nothing."""
        raw = generate_synthetic(8, 200, 1)
        once = preprocess(raw)
        np.testing.assert_allclose(np.linalg.norm(once.rows, axis=0), 1.0, atol=1e-9)
        np.testing.assert_allclose(once.rows.mean(axis=0), 0.0, atol=1e-9)
        twice = preprocess(once)
        np.testing.assert_allclose(twice.rows, once.rows, atol=1e-9)

    def test_constant_columns_dropped(self):
        """Test constant columns are removed and all-constant data fails."""
        X = np.array([[1.0, 5.0], [2.0, 5.0], [4.0, 5.0]])
        self.assertEqual(preprocess(FeatureMatrix(X, [0, 1, 1])).d, 1)
        with self.assertRaises(DataError):
            preprocess(FeatureMatrix(np.ones((3, 2)), [0, 1, 1]))

    def test_repeated_decimal_column_dropped(self):
        """Test a column repeating 0.1 counts as constant."""
        data = preprocess(FeatureMatrix([[0.1, 1.0], [0.1, 2.0], [0.1, 3.0]], [0, 1, 1]))
        self.assertEqual(data.feature_names, ["x1"])
        self.assertEqual(data.d, 1)
        self.assertTrue(np.isfinite(data.rows).all())

    def test_transform_matches_and_inverts_delta(self):
        """Test the fitted transform reproduces preprocess and maps deltas back."""
        raw = generate_synthetic(4, 50, 2)
        fitted = fit_preprocessor(raw)
        np.testing.assert_allclose(fitted.transform(raw).rows, preprocess(raw).rows)
        delta = np.full(len(fitted.kept), 0.1)
        raw_shift = np.zeros(raw.d)
        raw_shift[fitted.kept] = fitted.to_raw_delta(delta)
        moved = fitted.transform_rows(raw.rows[:1] + raw_shift) - fitted.transform_rows(raw.rows[:1])
        np.testing.assert_allclose(moved[0], delta, atol=1e-12)


class TestSplit(unittest.TestCase):
    """Test disjoint splitting."""

    def setUp(self):
        """Set up test fixtures."""
        self.data = FeatureMatrix(np.arange(20.0).reshape(10, 2), [0, 1] * 5)

    def test_disjoint_cover(self):
        """Test sizes (4,3,3) cover all 10 indices exactly once."""
        spec = split(self.data, (4, 3, 3), 0)
        joined = np.concatenate([spec.owner_train, spec.owner_test, spec.adversary_pool])
        self.assertEqual(sorted(joined.tolist()), list(range(10)))
        self.assertEqual(spec.sizes(), (4, 3, 3))

    def test_deterministic(self):
        """Test the same seed gives identical splits."""
        a, b = split(self.data, (4, 3, 3), 9), split(self.data, (4, 3, 3), 9)
        np.testing.assert_array_equal(a.owner_train, b.owner_train)
        np.testing.assert_array_equal(a.adversary_pool, b.adversary_pool)

    def test_oversized(self):
        """Test sizes exceeding n raise DataError."""
        with self.assertRaises(DataError):
            split(self.data, (6, 6, 0), 0)

    def test_generator_seed_recorded(self):
        """Test a Generator seed records an integer that reproduces the split."""
        spec = split(self.data, (4, 3, 3), np.random.default_rng(5))
        self.assertIsInstance(spec.seed, int)
        self.assertGreaterEqual(spec.seed, 0)
        again = split(self.data, (4, 3, 3), spec.seed)
        np.testing.assert_array_equal(again.owner_train, spec.owner_train)
        np.testing.assert_array_equal(again.owner_test, spec.owner_test)
        np.testing.assert_array_equal(again.adversary_pool, spec.adversary_pool)
        self.assertEqual(split(self.data, (4, 3, 3), 9).seed, 9)

    def test_partition(self):
        """Test consecutive chunks of equal size."""
        chunks = partition(np.arange(10), 3)
        self.assertEqual([c.tolist() for c in chunks], [[0, 1, 2], [3, 4, 5], [6, 7, 8]])
        with self.assertRaises(DataError):
            partition(np.arange(2), 3)


if __name__ == "__main__":
    unittest.main()
