"""
Seed-sweep recovery rates on the synthetic generators, and the closed-form limit of identical objects.
Detection time is measured around the detect call only.
"""
import time
from unittest import TestCase

import numpy as np

from fbod.core import Dataset, FbodParams, FluctuationDetector, detect, fluctuation, generate_graph, propagate
from fbod.metrics import evaluate, rank_auc
from fbod.synth import ClusterSpec, FrameSpec, Patch, make_clusters, make_frames

SEEDS = range(100)
REQUIRED_SUCCESSES = 95
CLOSED_FORM_SECONDS = 0.1
CLUSTER_SWEEP_SECONDS = 1.0
FRAME_RUN_SECONDS = 0.5


def timed_detect(dataset, params):
    started = time.perf_counter()
    report = detect(dataset, params)
    return report, time.perf_counter() - started


class ClosedFormTest(TestCase):
    def test_identical_objects(self):
        values = np.tile(np.array([[2.5], [0.1], [7.0]]), (1, 100))
        params = FbodParams(k=4, graph_count=3, seed=1)
        detector = FluctuationDetector(params)
        for t in range(params.graph_count):
            graph = generate_graph(100, 4, t, params.seed)
            fluctuations = fluctuation(values, propagate(values, graph))
            np.testing.assert_allclose(fluctuations.values, 0.6, rtol=0, atol=1e-12)
        started = time.perf_counter()
        report = detector.detect(Dataset(values))
        elapsed = time.perf_counter() - started
        np.testing.assert_allclose(report.of, 0.0, rtol=0, atol=1e-12)
        np.testing.assert_array_equal(report.order, np.arange(100))
        self.assertLess(elapsed, CLOSED_FORM_SECONDS)


class ClusterRecoveryTest(TestCase):
    def test_planted_outliers(self):
        successes = 0
        total = 0.0
        for seed in SEEDS:
            dataset = make_clusters(ClusterSpec(n_normal=16, n_outliers=4, seed=seed))
            report, elapsed = timed_detect(dataset, FbodParams(k=5, graph_count=3, top_p=4, seed=seed))
            total += elapsed
            if rank_auc(report.of, dataset.labels) == 1.0:
                successes += 1
        self.assertGreaterEqual(successes, REQUIRED_SUCCESSES)
        self.assertLess(total, CLUSTER_SWEEP_SECONDS)


class FrameRecoveryTest(TestCase):
    def test_anomalous_frames(self):
        successes = 0
        slowest = 0.0
        for seed in SEEDS:
            dataset = make_frames(FrameSpec(seed=seed)).dataset
            report, elapsed = timed_detect(dataset, FbodParams(k=10, graph_count=5, top_p=3, seed=seed))
            slowest = max(slowest, elapsed)
            result = evaluate(report, dataset.labels)
            if (result.auc, result.dr, result.far) == (1.0, 1.0, 0.0):
                successes += 1
        self.assertGreaterEqual(successes, REQUIRED_SUCCESSES)
        self.assertLess(slowest, FRAME_RUN_SECONDS)

    def test_negative_control(self):
        aucs = []
        for seed in SEEDS:
            dataset = make_frames(FrameSpec(patch=Patch(delta=0.0), seed=seed)).dataset
            report = detect(dataset, FbodParams(k=10, graph_count=5, top_p=3, seed=seed))
            aucs.append(rank_auc(report.of, dataset.labels))
        self.assertTrue(0.4 <= np.mean(aucs) <= 0.6, msg=f"mean AUC {np.mean(aucs):.3f}")
