"""
Evaluation of a detection run against ground-truth labels: rank-sum AUC, accuracy,
detection rate and false alarm rate, plus a trapezoidal ROC oracle for the AUC.
"""
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.stats import rankdata

from fbod.core import NeighborTable, ScoreReport
from fbod.exceptions import DatasetError, ShapeError, UndefinedMetricError

_trapezoid = getattr(np, 'trapezoid', None) or np.trapz


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class EvalReport:
    auc: Optional[float]
    acc: float
    dr: float
    far: float
    counts: ConfusionCounts
    nbr_outlier_ratio: Optional[float] = None

    def to_dict(self) -> dict:
        result = {
            'auc': self.auc,
            'acc': self.acc,
            'dr': self.dr,
            'far': self.far,
            'tp': self.counts.tp,
            'tn': self.counts.tn,
            'fp': self.counts.fp,
            'fn': self.counts.fn,
        }
        if self.nbr_outlier_ratio is not None:
            result['nbr_outlier_ratio'] = self.nbr_outlier_ratio
        return result


def _labels(labels, n: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ShapeError(f"label vector has shape {labels.shape}, expected ({n},)")
    if not np.isin(labels, (0, 1)).all():
        raise DatasetError("labels must be 0 or 1")
    return labels.astype(bool)


def _scores_and_labels(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1:
        raise ShapeError(f"scores must be a vector, got shape {scores.shape}")
    if not np.isfinite(scores).all():
        raise UndefinedMetricError("scores must be finite")
    positive = _labels(labels, scores.shape[0])
    n_outliers = int(positive.sum())
    if n_outliers == 0 or n_outliers == positive.shape[0]:
        raise UndefinedMetricError("AUC needs at least one outlier and one normal object")
    return scores, positive


def rank_auc(scores, labels) -> float:
    """
    (S - (n_o^2 + n_o) / 2) / (n_o * n_n), S being the sum of the outliers' ranks.

    Ranks ascend with the score (rank 1 = lowest) and tied scores share their midrank,
    which makes the value the Mann-Whitney normalization of the ROC area.
    """
    scores, positive = _scores_and_labels(scores, labels)
    n_outliers = int(positive.sum())
    n_normal = positive.shape[0] - n_outliers
    rank_sum = rankdata(scores, method='average')[positive].sum()
    return float((rank_sum - (n_outliers ** 2 + n_outliers) / 2) / (n_outliers * n_normal))


def roc_auc_oracle(scores, labels) -> float:
    """
    Area under the (FPR, TPR) staircase, one threshold step per distinct score
    """
    scores, positive = _scores_and_labels(scores, labels)
    distinct, group = np.unique(scores, return_inverse=True)
    outliers_at = np.bincount(group, weights=positive.astype(np.float64), minlength=distinct.shape[0])[::-1]
    normals_at = np.bincount(group, weights=(~positive).astype(np.float64), minlength=distinct.shape[0])[::-1]
    tpr = np.concatenate(([0.0], np.cumsum(outliers_at) / outliers_at.sum()))
    fpr = np.concatenate(([0.0], np.cumsum(normals_at) / normals_at.sum()))
    return float(_trapezoid(tpr, fpr))


def confusion_metrics(predicted, labels) -> EvalReport:
    """
    Counts the top-p prediction against the labels. The returned report has auc=None.
    """
    predicted = np.asarray(predicted)
    if predicted.ndim != 1:
        raise ShapeError(f"predictions must be a vector, got shape {predicted.shape}")
    predicted = predicted.astype(bool)
    positive = _labels(labels, predicted.shape[0])

    counts = ConfusionCounts(
        tp=int(np.sum(predicted & positive)),
        tn=int(np.sum(~predicted & ~positive)),
        fp=int(np.sum(predicted & ~positive)),
        fn=int(np.sum(~predicted & positive)),
    )
    if counts.tp + counts.fn == 0:
        raise UndefinedMetricError("detection rate is undefined without true outliers")
    if counts.tn + counts.fp == 0:
        raise UndefinedMetricError("false alarm rate is undefined without normal objects")
    return EvalReport(
        auc=None,
        acc=(counts.tp + counts.tn) / counts.n,
        dr=counts.tp / (counts.tp + counts.fn),
        far=counts.fp / (counts.tn + counts.fp),
        counts=counts,
    )


def neighborhood_outlier_ratio(graph: NeighborTable, labels) -> float:
    """
    Share of sampled neighbors that are true outliers, averaged over all objects.
    Uniform sampling keeps it close to the dataset's own outlier ratio.
    """
    positive = _labels(labels, graph.n)
    return float(positive[graph.neighbors].mean())


def evaluate(report: ScoreReport, labels) -> EvalReport:
    result = confusion_metrics(report.predicted, labels)
    return replace(result, auc=rank_auc(report.of, labels))
