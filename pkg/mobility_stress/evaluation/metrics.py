"""Confusion matrices, support-weighted metrics and the mode baseline."""

from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from mobility_stress.exceptions import EmptyMatrix

N_CLASSES = 3


class ConfusionMatrix:
    """Counts with rows = true class and columns = predicted class."""

    def __init__(self, counts: np.ndarray) -> None:
        counts = np.asarray(counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError(
                f"a confusion matrix must be square, got shape {counts.shape}"
            )
        if np.any(counts < 0):
            raise ValueError("confusion counts must be non-negative")
        self.counts = counts.astype(np.int64)

    @classmethod
    def from_predictions(
        cls, y_true: Sequence[int], y_pred: Sequence[int], n_classes: int = N_CLASSES
    ) -> "ConfusionMatrix":
        counts = np.zeros((n_classes, n_classes), dtype=np.int64)
        rows = np.asarray(y_true, dtype=np.int64)
        cols = np.asarray(y_pred, dtype=np.int64)
        np.add.at(counts, (rows, cols), 1)
        return cls(counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def support(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    def accuracy(self) -> float:
        if self.total == 0:
            raise EmptyMatrix("accuracy of an empty confusion matrix")
        return float(np.trace(self.counts) / self.total)

    def to_list(self) -> List[List[int]]:
        return self.counts.tolist()


class ClassMetrics(BaseModel):
    model_config = ConfigDict(frozen=True)

    label: int
    precision: float
    recall: float
    f1: float
    support: int


def _safe_ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    out = np.zeros(num.shape, dtype=np.float64)
    np.divide(num, den, out=out, where=den != 0)
    return out


def per_class_prf(cm: ConfusionMatrix) -> List[ClassMetrics]:
    """Precision, recall and F1 per class; zero denominators give 0."""
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    precision = _safe_ratio(tp, counts.sum(axis=0))
    recall = _safe_ratio(tp, counts.sum(axis=1))
    f1 = _safe_ratio(2.0 * precision * recall, precision + recall)
    return [
        ClassMetrics(
            label=c,
            precision=float(precision[c]),
            recall=float(recall[c]),
            f1=float(f1[c]),
            support=int(cm.support[c]),
        )
        for c in range(len(tp))
    ]


def weighted_prf(cm: ConfusionMatrix) -> Tuple[float, float, float]:
    """Per-class metrics averaged with weights = true-class share.

    Raises:
        EmptyMatrix: if the matrix has no counts.
    """
    total = cm.total
    if total == 0:
        raise EmptyMatrix("weighted metrics of an empty confusion matrix")
    weights = cm.support / total
    per_class = per_class_prf(cm)
    precision = float(sum(w * m.precision for w, m in zip(weights, per_class)))
    recall = float(sum(w * m.recall for w, m in zip(weights, per_class)))
    f1 = float(sum(w * m.f1 for w, m in zip(weights, per_class)))
    return precision, recall, f1


class ModeClassifier:
    """Always predicts the most frequent training class (lowest index on ties)."""

    def __init__(self, label: int) -> None:
        self.label = int(label)

    def predict(self, features: np.ndarray | int) -> np.ndarray:
        n = features if isinstance(features, int) else len(features)
        return np.full(n, self.label, dtype=np.int64)


def mode_baseline(train_labels: Sequence[int]) -> ModeClassifier:
    labels = np.asarray(train_labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("mode_baseline needs at least one training label")
    return ModeClassifier(int(np.argmax(np.bincount(labels))))
