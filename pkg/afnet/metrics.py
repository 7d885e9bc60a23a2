"""
Classification metrics
Accuracy, support-weighted precision/recall/F1 and ROC-AUC, the columns of
the comparison table.
"""

from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from sklearn.metrics import confusion_matrix as sk_confusion_matrix
from sklearn.metrics import roc_auc_score

from afnet.errors import ValidationError

METRIC_NAMES = ("weighted_precision", "accuracy", "weighted_recall", "auc", "weighted_f1")
METRIC_LABELS = {
    "weighted_precision": "Weighted Precision",
    "accuracy": "Accuracy",
    "weighted_recall": "Weighted Recall",
    "auc": "AUC",
    "weighted_f1": "Weighted F1",
}


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are true classes, columns predicted classes"""

    counts: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class MetricsReport:
    """One evaluated fold: the five table metrics plus where they came from"""

    activation: str
    fold: int
    repeat: int
    n_samples: int
    accuracy: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    auc: float

    def __post_init__(self):
        for name in METRIC_NAMES:
            value = getattr(self, name)
            if not (0.0 <= value <= 1.0):
                raise ValidationError(f"{name} must lie in [0, 1], got {value}")

    def to_dict(self) -> Dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict) -> "MetricsReport":
        return cls(**data)


def _check_labels(labels: np.ndarray, n_classes: int, what: str):
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        bad = labels[(labels < 0) | (labels >= n_classes)][0]
        raise ValidationError(f"{what} label {bad} outside [0, {n_classes})")


def confusion(true_labels, predicted_labels, n_classes: int) -> ConfusionMatrix:
    true_labels = np.asarray(true_labels, dtype=np.int64)
    predicted_labels = np.asarray(predicted_labels, dtype=np.int64)
    if true_labels.shape != predicted_labels.shape:
        raise ValidationError(
            f"label lengths differ: {true_labels.shape[0]} true vs {predicted_labels.shape[0]} predicted"
        )
    if n_classes < 1:
        raise ValidationError(f"n_classes must be >= 1, got {n_classes}")
    _check_labels(true_labels, n_classes, "true")
    _check_labels(predicted_labels, n_classes, "predicted")

    if true_labels.size == 0:
        return ConfusionMatrix(np.zeros((n_classes, n_classes), dtype=np.int64))
    counts = sk_confusion_matrix(true_labels, predicted_labels, labels=list(range(n_classes)))
    return ConfusionMatrix(counts.astype(np.int64))


def _require_samples(cm: ConfusionMatrix):
    if cm.total == 0:
        raise ValidationError("confusion matrix is empty")


def _safe_divide(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    """Elementwise division with 0 wherever the denominator is 0"""
    out = np.zeros_like(numerator, dtype=np.float64)
    np.divide(numerator, denominator, out=out, where=denominator != 0)
    return out


def per_class_prf(cm: ConfusionMatrix) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-class precision, recall, F1 and true support"""
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    predicted = counts.sum(axis=0)
    support = counts.sum(axis=1)

    precision = _safe_divide(tp, predicted)
    recall = _safe_divide(tp, support)
    f1 = _safe_divide(2 * precision * recall, precision + recall)
    return precision, recall, f1, support


def weighted_prf(cm: ConfusionMatrix) -> Tuple[float, float, float]:
    """Precision, recall and F1 averaged with true-class support as weights"""
    _require_samples(cm)
    precision, recall, f1, support = per_class_prf(cm)
    total = support.sum()
    # support-weighted recall is sum(TP) / N, computed directly so it equals accuracy
    weighted_recall = np.diag(cm.counts).sum() / total
    return (
        float(np.dot(support, precision) / total),
        float(weighted_recall),
        float(np.dot(support, f1) / total),
    )


def accuracy(cm: ConfusionMatrix) -> float:
    _require_samples(cm)
    return float(np.diag(cm.counts).sum() / cm.counts.sum(axis=1).astype(np.float64).sum())


def roc_auc(scores, labels) -> float:
    """
    Binary ROC-AUC: the probability that a random positive outscores a random
    negative, ties counted one half.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValidationError(
            f"scores and labels differ in length: {scores.shape[0]} vs {labels.shape[0]}"
        )
    present = np.unique(labels)
    if present.size != 2 or not set(present.tolist()) <= {0, 1}:
        raise ValidationError(
            f"AUC undefined: need both classes 0 and 1, got {present.tolist()}"
        )
    return float(roc_auc_score(labels, scores))


def macro_ovr_auc(probabilities: np.ndarray, labels) -> float:
    """Macro average of one-vs-rest AUCs; binary tasks use the class-1 column"""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = probabilities.shape[1]
    if n_classes == 2:
        return roc_auc(probabilities[:, 1], labels)

    aucs = [
        roc_auc(probabilities[:, c], (labels == c).astype(np.int64))
        for c in range(n_classes)
    ]
    return float(np.mean(aucs))


def pairwise_auc(scores, labels) -> float:
    """O(n^2) concordance count, kept as a reference for ``roc_auc``"""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    positives = scores[labels == 1]
    negatives = scores[labels == 0]
    if positives.size == 0 or negatives.size == 0:
        raise ValidationError("AUC undefined: need both classes 0 and 1")
    diff = positives[:, None] - negatives[None, :]
    wins = (diff > 0).sum() + 0.5 * (diff == 0).sum()
    return float(wins / (positives.size * negatives.size))


def evaluate(
    probabilities: np.ndarray,
    labels,
    activation: str = "",
    fold: int = 0,
    repeat: int = 0,
    n_classes: Optional[int] = None,
) -> MetricsReport:
    """All five metrics for one held-out fold"""
    probabilities = np.asarray(probabilities)
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = n_classes or probabilities.shape[1]

    cm = confusion(labels, probabilities.argmax(axis=1), n_classes)
    precision, recall, f1 = weighted_prf(cm)
    return MetricsReport(
        activation=activation,
        fold=fold,
        repeat=repeat,
        n_samples=int(labels.shape[0]),
        accuracy=accuracy(cm),
        weighted_precision=precision,
        weighted_recall=recall,
        weighted_f1=f1,
        auc=macro_ovr_auc(probabilities, labels),
    )


def summarize(reports: Sequence[MetricsReport]) -> Dict[str, Dict[str, float]]:
    """Mean and population standard deviation of each metric"""
    if not reports:
        raise ValidationError("no reports to summarize")
    out = {}
    for name in METRIC_NAMES:
        values = np.array([getattr(r, name) for r in reports], dtype=np.float64)
        out[name] = {"mean": float(values.mean()), "std": float(values.std())}
    return out
