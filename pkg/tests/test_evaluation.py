"""
Unit tests for stratified folds and repeated cross-validation
"""

import json
import sys
import unittest
from pathlib import Path

import numpy as np
import pytest

# Add parent directory to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from afnet.data import make_blobs
from afnet.errors import ValidationError
from afnet.evaluation import CvSummary, derive_seed, run_cv, stratified_kfold
from afnet.layers import LayerSpec
from afnet.metrics import METRIC_NAMES
from afnet.nn import TrainConfig


def tiny_template(activation, n_classes):
    return [
        LayerSpec.dense(4),
        LayerSpec.act(activation),
        LayerSpec.dense(n_classes),
        LayerSpec.softmax(),
    ]


class TestStratifiedKFold(unittest.TestCase):
    """Test fold assignment"""

    def test_balanced_exact_division(self):
        labels = np.array([0, 1] * 5)
        plan = stratified_kfold(labels, 5, seed=1)
        self.assertEqual(plan.fold_sizes(), [2] * 5)
        for fold in range(5):
            self.assertEqual(sorted(labels[plan.test_indices(fold)].tolist()), [0, 1])

    def test_single_class_singletons(self):
        plan = stratified_kfold(np.zeros(9, dtype=int), 9, seed=0)
        self.assertEqual(plan.fold_sizes(), [1] * 9)

    def test_partition(self):
        labels = np.random.default_rng(0).integers(0, 3, 47)
        labels[:15] = np.repeat([0, 1, 2], 5)
        plan = stratified_kfold(labels, 5, seed=3)
        folds = [set(plan.test_indices(f).tolist()) for f in range(5)]
        self.assertEqual(set().union(*folds), set(range(47)))
        self.assertEqual(sum(len(f) for f in folds), 47)

    def test_per_class_counts_differ_by_at_most_one(self):
        labels = np.array([0] * 13 + [1] * 7 + [2] * 22)
        plan = stratified_kfold(labels, 4, seed=8)
        for cls in range(3):
            counts = [int((labels[plan.test_indices(f)] == cls).sum()) for f in range(4)]
            self.assertLessEqual(max(counts) - min(counts), 1)

    def test_deterministic(self):
        labels = np.arange(30) % 3
        a = stratified_kfold(labels, 3, seed=5)
        b = stratified_kfold(labels, 3, seed=5)
        np.testing.assert_array_equal(a.assignments, b.assignments)

    def test_too_few_samples_names_class(self):
        with self.assertRaises(ValidationError) as ctx:
            stratified_kfold(np.array([0, 0, 0, 1]), 2, seed=0)
        self.assertIn("class 1", str(ctx.exception))

    def test_blob_with_one_per_class(self):
        data = make_blobs(1, n_classes=2)
        with self.assertRaises(ValidationError):
            stratified_kfold(data.labels, 2, seed=0)

    def test_k_at_least_two(self):
        with self.assertRaises(ValidationError):
            stratified_kfold(np.zeros(4, dtype=int), 1, seed=0)


class TestDeriveSeed(unittest.TestCase):
    def test_stable_and_distinct(self):
        self.assertEqual(derive_seed(42, "relu", 0, 1), derive_seed(42, "relu", 0, 1))
        self.assertNotEqual(derive_seed(42, "relu", 0, 1), derive_seed(42, "relu", 1, 0))
        self.assertNotEqual(derive_seed(42, "relu", 0, 1), derive_seed(43, "relu", 0, 1))
        self.assertLess(derive_seed(0, "x"), 2**64)


class TestRunCv(unittest.TestCase):
    """Test the cross-validation protocol bookkeeping"""

    @classmethod
    def setUpClass(cls):
        cls.data = make_blobs(10, n_classes=2, dim=3, separation=4.0, seed=0)
        cls.config = TrainConfig(epochs=1, batch_size=8, seed=123)

    def test_two_folds_one_repeat(self):
        summary = run_cv(self.data, tiny_template, self.config, ["alrelu"], k=2, repeats=1)
        self.assertEqual(len(summary.reports), 2)
        plan = summary.fold_plans[0]
        for report in summary.reports:
            self.assertEqual(report.n_samples, len(plan.test_indices(report.fold)))

    def test_no_leakage_and_each_sample_once_per_repeat(self):
        summary = run_cv(self.data, tiny_template, self.config, ["relu"], k=5, repeats=2)
        for plan in summary.fold_plans:
            seen = []
            for fold in range(5):
                train = set(plan.train_indices(fold).tolist())
                test = set(plan.test_indices(fold).tolist())
                self.assertFalse(train & test)
                seen.extend(test)
            self.assertEqual(sorted(seen), list(range(len(self.data))))

    def test_repeats_reshuffle_folds(self):
        summary = run_cv(self.data, tiny_template, self.config, ["relu"], k=2, repeats=2)
        a, b = summary.fold_plans
        self.assertFalse(np.array_equal(a.assignments, b.assignments))

    def test_summary_means_match_reports(self):
        summary = run_cv(self.data, tiny_template, self.config, ["relu", "alrelu"], k=2, repeats=2)
        for activation in summary.activations:
            reports = summary.reports_for(activation)
            self.assertEqual(len(reports), 4)
            for metric in METRIC_NAMES:
                mean = np.mean([getattr(r, metric) for r in reports])
                self.assertAlmostEqual(summary.mean(activation, metric), mean, delta=1e-9)

    def test_same_seed_identical_json(self):
        first = run_cv(self.data, tiny_template, self.config, ["lrelu"], k=2, repeats=1)
        second = run_cv(self.data, tiny_template, self.config, ["lrelu"], k=2, repeats=1)
        self.assertEqual(
            json.dumps(first.to_dict(), sort_keys=True),
            json.dumps(second.to_dict(), sort_keys=True),
        )

    def test_workers_do_not_change_result(self):
        serial = run_cv(self.data, tiny_template, self.config, ["relu", "alrelu"], k=2, repeats=1)
        threaded = run_cv(self.data, tiny_template, self.config, ["relu", "alrelu"], k=2, repeats=1, workers=3)
        self.assertEqual(serial.to_dict(), threaded.to_dict())

    def test_summary_dict_round_trip(self):
        summary = run_cv(self.data, tiny_template, self.config, ["alrelu"], k=2, repeats=1)
        restored = CvSummary.from_dict(summary.to_dict())
        self.assertEqual(restored.to_dict(), summary.to_dict())

    def test_best_by_metric(self):
        summary = run_cv(self.data, tiny_template, self.config, ["relu", "alrelu"], k=2, repeats=1)
        best = summary.best_by_metric()
        self.assertEqual(set(best), set(METRIC_NAMES))
        for metric, activation in best.items():
            for other in summary.activations:
                self.assertGreaterEqual(summary.mean(activation, metric), summary.mean(other, metric))

    def test_needs_activations(self):
        with self.assertRaises(ValidationError):
            run_cv(self.data, tiny_template, self.config, [], k=2, repeats=1)


@pytest.mark.slow
class TestFullProtocol(unittest.TestCase):
    """Five folds, four repeats, three activations"""

    def test_sixty_reports(self):
        data = make_blobs(10, n_classes=2, dim=2, separation=6.0, seed=1)
        summary = run_cv(
            data,
            tiny_template,
            TrainConfig(epochs=1, batch_size=8, seed=7),
            ["relu", "lrelu", "alrelu"],
            k=5,
            repeats=4,
            workers=2,
        )
        self.assertEqual(len(summary.reports), 60)
        keys = {(r.activation, r.repeat, r.fold) for r in summary.reports}
        self.assertEqual(len(keys), 60)


def mlp_template(activation, n_classes):
    return [
        LayerSpec.dense(16),
        LayerSpec.act(activation),
        LayerSpec.dense(n_classes),
        LayerSpec.softmax(),
    ]


@pytest.mark.slow
class TestConvergenceParity(unittest.TestCase):
    """All three activations learn well-separated blobs about equally well"""

    def test_mean_accuracy_close_for_all_activations(self):
        data = make_blobs(100, n_classes=2, dim=2, separation=10.0, seed=0)
        summary = run_cv(
            data,
            mlp_template,
            TrainConfig(epochs=15, batch_size=16, learning_rate=0.01, seed=42),
            ["relu", "lrelu", "alrelu"],
            k=5,
            repeats=4,
            workers=2,
        )
        means = {name: summary.mean(name, "accuracy") for name in summary.activations}
        for name, mean in means.items():
            self.assertGreaterEqual(mean, 0.95, name)
        self.assertLessEqual(max(means.values()) - min(means.values()), 0.05)


if __name__ == "__main__":
    unittest.main()
