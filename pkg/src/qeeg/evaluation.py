"""Classification metrics: confusion matrix, precision/recall/F1, ROC, AUC, MAE."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Literal, Sequence

import numpy as np

Averaging = Literal["binary_positive", "macro"]


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class RocPoint:
    false_positive_rate: float
    true_positive_rate: float
    threshold: float


@dataclass
class EvalReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: list[list[int]]
    auc: float | None
    mae: float
    averaging: str = "binary_positive"
    n_samples: int = 0
    roc: list[RocPoint] = field(default_factory=list, repr=False)

    def to_dict(self, include_roc: bool = False) -> dict:
        d = asdict(self)
        if not include_roc:
            d.pop("roc")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def confusion_matrix(true_labels, predicted_labels, n_classes: int) -> np.ndarray:
    """counts[t, p]; rows are true classes, columns predictions."""
    t = np.asarray(true_labels, dtype=int)
    p = np.asarray(predicted_labels, dtype=int)
    if t.shape != p.shape:
        raise MetricError(f"{len(t)} true labels vs {len(p)} predictions")
    for name, arr in (("true", t), ("predicted", p)):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise MetricError(f"{name} label out of range for {n_classes} classes")
    cm = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(cm, (t, p), 1)
    return cm


def _ratio(num: float, den: float) -> float:
    return float(num / den) if den else 0.0


def _prf(tp: float, fp: float, fn: float) -> tuple[float, float, float]:
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _ratio(2 * precision * recall, precision + recall)
    return precision, recall, f1


def classification_metrics(cm, averaging: Averaging = "binary_positive") -> tuple[float, float, float, float]:
    """(accuracy, precision, recall, f1). Zero denominators give 0."""
    cm = np.asarray(cm)
    total = cm.sum()
    if total == 0:
        raise MetricError("confusion matrix is empty")
    accuracy = float(np.trace(cm) / total)
    if averaging == "binary_positive":
        if cm.shape != (2, 2):
            raise MetricError("binary_positive averaging needs a 2x2 confusion matrix")
        tp, fp, fn = cm[1, 1], cm[0, 1], cm[1, 0]
        return (accuracy, *_prf(tp, fp, fn))
    if averaging == "macro":
        per_class = [
            _prf(cm[k, k], cm[:, k].sum() - cm[k, k], cm[k, :].sum() - cm[k, k])
            for k in range(cm.shape[0])
        ]
        p, r, f = (float(np.mean(col)) for col in zip(*per_class))
        return accuracy, p, r, f
    raise MetricError(f"unknown averaging {averaging!r}")


def roc_curve(positive_scores, true_labels) -> list[RocPoint]:
    """Threshold sweep over distinct scores, highest first; tied scores move
    together. The first point (threshold +inf) is (0, 0), the last (1, 1)."""
    s = np.asarray(positive_scores, dtype=float)
    y = np.asarray(true_labels, dtype=int)
    if s.shape != y.shape:
        raise MetricError("scores and labels differ in length")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0 or n_pos + n_neg != len(y):
        raise MetricError("ROC curve is undefined unless both classes 0 and 1 are present")
    order = np.argsort(-s, kind="mergesort")
    s, y = s[order], y[order]
    tps = np.cumsum(y == 1)
    fps = np.cumsum(y == 0)
    last_of_group = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1]
    points = [RocPoint(0.0, 0.0, float("inf"))]
    for i in last_of_group:
        points.append(RocPoint(fps[i] / n_neg, tps[i] / n_pos, float(s[i])))
    return points


def auc(curve: Sequence[RocPoint]) -> float:
    fpr = np.array([p.false_positive_rate for p in curve])
    tpr = np.array([p.true_positive_rate for p in curve])
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2))


def mae(probabilities, true_labels) -> float:
    """Mean over samples and classes of |p_c - onehot_c|."""
    p = np.atleast_2d(np.asarray(probabilities, dtype=float))
    y = np.asarray(true_labels, dtype=int)
    if len(p) != len(y):
        raise MetricError(f"{len(p)} probability rows vs {len(y)} labels")
    onehot = np.zeros_like(p)
    onehot[np.arange(len(y)), y] = 1.0
    return float(np.mean(np.abs(p - onehot)))


def evaluate(probabilities, true_labels, averaging: Averaging | None = None) -> EvalReport:
    p = np.atleast_2d(np.asarray(probabilities, dtype=float))
    y = np.asarray(true_labels, dtype=int)
    n_classes = p.shape[1]
    if averaging is None:
        averaging = "binary_positive" if n_classes == 2 else "macro"
    pred = np.argmax(p, axis=1)
    cm = confusion_matrix(y, pred, n_classes)
    acc, prec, rec, f1 = classification_metrics(cm, averaging)
    roc, area = [], None
    if n_classes == 2 and len(set(y.tolist())) == 2:
        roc = roc_curve(p[:, 1], y)
        area = auc(roc)
    return EvalReport(acc, prec, rec, f1, cm.tolist(), area, mae(p, y), averaging, len(y), roc)


def write_roc_csv(curve: Sequence[RocPoint], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["fpr", "tpr", "threshold"])
        for pt in curve:
            w.writerow([repr(pt.false_positive_rate), repr(pt.true_positive_rate), repr(pt.threshold)])
