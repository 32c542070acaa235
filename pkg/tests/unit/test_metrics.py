from unittest import TestCase

import numpy as np

from fbod.core import Dataset, FbodParams, NeighborTable, detect, generate_graph
from fbod.exceptions import ShapeError, UndefinedMetricError
from fbod.metrics import confusion_metrics, evaluate, neighborhood_outlier_ratio, rank_auc, roc_auc_oracle


def pairwise_auc(scores, labels) -> float:
    scores = np.asarray(scores)
    labels = np.asarray(labels).astype(bool)
    outliers = scores[labels][:, None]
    normals = scores[~labels][None, :]
    wins = (outliers > normals).sum() + 0.5 * (outliers == normals).sum()
    return wins / (outliers.size * normals.size)


class RankAucTest(TestCase):
    def test_perfect_separation(self):
        self.assertEqual(rank_auc([0.9, 0.8, 0.2, 0.1], [1, 0, 0, 0]), 1.0)

    def test_half(self):
        self.assertEqual(rank_auc([0.9, 0.8, 0.1, 0.2], [1, 0, 1, 0]), 0.5)

    def test_inverted(self):
        self.assertEqual(rank_auc([0.1, 0.2, 0.8, 0.9], [1, 1, 0, 0]), 0.0)

    def test_all_tied(self):
        self.assertEqual(rank_auc([3.0, 3.0, 3.0, 3.0], [1, 0, 0, 1]), 0.5)

    def test_single_class(self):
        with self.assertRaises(UndefinedMetricError):
            rank_auc([0.1, 0.2], [0, 0])
        with self.assertRaises(UndefinedMetricError):
            rank_auc([0.1, 0.2], [1, 1])

    def test_length_mismatch(self):
        with self.assertRaises(ShapeError):
            rank_auc([0.1, 0.2, 0.3], [0, 1])

    def test_matches_oracle(self):
        rng = np.random.default_rng(0)
        for instance in range(200):
            n = int(rng.integers(2, 65))
            labels = np.zeros(n, dtype=int)
            labels[rng.choice(n, int(rng.integers(1, n)), replace=False)] = 1
            if instance % 2:
                scores = rng.integers(0, 5, size=n).astype(float)
            else:
                scores = rng.normal(size=n)
            self.assertAlmostEqual(rank_auc(scores, labels), roc_auc_oracle(scores, labels), delta=1e-9)
            self.assertAlmostEqual(rank_auc(scores, labels), pairwise_auc(scores, labels), delta=1e-9)

    def test_monotone_transform(self):
        rng = np.random.default_rng(1)
        scores = rng.normal(size=40)
        labels = (rng.random(40) < 0.3).astype(int)
        labels[:2] = [0, 1]
        self.assertAlmostEqual(rank_auc(scores, labels), rank_auc(np.exp(3 * scores) + 5, labels), delta=1e-12)

    def test_complement(self):
        rng = np.random.default_rng(2)
        scores = rng.permutation(50).astype(float)
        labels = np.zeros(50, dtype=int)
        labels[rng.choice(50, 8, replace=False)] = 1
        self.assertAlmostEqual(rank_auc(scores, labels) + rank_auc(-scores, labels), 1.0, delta=1e-12)


class RocAucOracleTest(TestCase):
    def test_perfect(self):
        self.assertEqual(roc_auc_oracle([0.9, 0.8, 0.2, 0.1], [1, 0, 0, 0]), 1.0)

    def test_inverted(self):
        self.assertEqual(roc_auc_oracle([0.1, 0.8, 0.9], [1, 0, 0]), 0.0)

    def test_half(self):
        self.assertEqual(roc_auc_oracle([0.9, 0.8, 0.1, 0.2], [1, 0, 1, 0]), 0.5)

    def test_single_class(self):
        with self.assertRaises(UndefinedMetricError):
            roc_auc_oracle([0.1, 0.2], [1, 1])


class ConfusionMetricsTest(TestCase):
    def test_hand_count(self):
        labels = np.zeros(10, dtype=int)
        labels[[0, 1, 2]] = 1
        predicted = np.zeros(10, dtype=bool)
        predicted[[0, 1, 5]] = True
        report = confusion_metrics(predicted, labels)
        self.assertEqual((report.counts.tp, report.counts.fp, report.counts.fn, report.counts.tn), (2, 1, 1, 6))
        self.assertAlmostEqual(report.acc, 0.8)
        self.assertAlmostEqual(report.dr, 2 / 3)
        self.assertAlmostEqual(report.far, 1 / 7)
        self.assertIsNone(report.auc)

    def test_exact_prediction(self):
        labels = np.array([0, 1, 0, 1, 0])
        report = confusion_metrics(labels.astype(bool), labels)
        self.assertEqual((report.acc, report.dr, report.far), (1.0, 1.0, 0.0))

    def test_nothing_predicted(self):
        labels = np.array([1, 0, 0, 1, 0, 0])
        report = confusion_metrics(np.zeros(6, dtype=bool), labels)
        self.assertEqual(report.counts.tp, 0)
        self.assertEqual((report.dr, report.far), (0.0, 0.0))
        self.assertAlmostEqual(report.acc, 4 / 6)

    def test_counts_are_consistent(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            labels = (rng.random(30) < 0.2).astype(int)
            labels[:2] = [0, 1]
            predicted = rng.random(30) < 0.3
            report = confusion_metrics(predicted, labels)
            counts = report.counts
            self.assertEqual(counts.n, 30)
            self.assertEqual(counts.tp + counts.fn, labels.sum())
            self.assertEqual(counts.tn + counts.fp, 30 - labels.sum())
            self.assertAlmostEqual(report.acc, (counts.tp + counts.tn) / 30)
            self.assertAlmostEqual(report.dr, counts.tp / (counts.tp + counts.fn))
            self.assertAlmostEqual(report.far, counts.fp / (counts.tn + counts.fp))

    def test_undefined_rates(self):
        with self.assertRaises(UndefinedMetricError):
            confusion_metrics([True, False], [0, 0])
        with self.assertRaises(UndefinedMetricError):
            confusion_metrics([True, False], [1, 1])

    def test_length_mismatch(self):
        with self.assertRaises(ShapeError):
            confusion_metrics([True, False, True], [0, 1])


class NeighborhoodOutlierRatioTest(TestCase):
    def test_hand_table(self):
        graph = NeighborTable(np.array([[1, 2], [0, 2], [0, 1]]))
        self.assertAlmostEqual(neighborhood_outlier_ratio(graph, [0, 0, 1]), 2 / 6)

    def test_tracks_dataset_ratio(self):
        labels = np.zeros(1000, dtype=int)
        labels[:80] = 1
        graph = generate_graph(1000, 10, 0, 4)
        self.assertAlmostEqual(neighborhood_outlier_ratio(graph, labels), 0.08, delta=0.01)


class EvaluateTest(TestCase):
    def test_evaluate(self):
        values = np.array([[1.0, 1.0, 1.0, 1.0, 1.0, 9.0]])
        dataset = Dataset(values, labels=[0, 0, 0, 0, 0, 1])
        report = detect(dataset, FbodParams(k=4, graph_count=2, top_p=1, seed=0))
        result = evaluate(report, dataset.labels)
        self.assertEqual(result.auc, 1.0)
        self.assertEqual((result.dr, result.far, result.acc), (1.0, 0.0, 1.0))
        self.assertEqual(result.to_dict()['tp'], 1)
