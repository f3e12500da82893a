"""Confusion counts, accuracy, and F1 with ASD (label 1) as the positive class."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, ShapeError
from .serialize import dump_json


@dataclass
class Confusion:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass
class MetricsReport:
    acc: float
    f1: float
    precision: float
    recall: float
    per_class_recall: list[float]  # [TD, ASD]
    confusion: Confusion


def confusion(y_true, y_pred) -> Confusion:
    """Binary confusion counts with 1 = positive (ASD)."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.shape != y_pred.shape or y_true.ndim != 1:
        raise ShapeError(
            f"label vectors must be 1-D and equal length, got {list(y_true.shape)} "
            f"and {list(y_pred.shape)}"
        )
    for name, v in (("y_true", y_true), ("y_pred", y_pred)):
        if v.size and (np.any(v < 0) or np.any(v > 1)):
            raise ShapeError(f"{name} contains labels outside {{0, 1}}")
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    return Confusion(tp=tp, fp=fp, fn=fn, tn=tn)


def _rate(num: int, den: int) -> float:
    # 0/0 rates are defined as 0
    return num / den if den > 0 else 0.0


def scores(c: Confusion) -> MetricsReport:
    """Accuracy, precision, recall, F1, and per-class recall from counts."""
    n = c.total
    if n == 0:
        raise DegenerateInputError("cannot score an empty evaluation")
    precision = _rate(c.tp, c.tp + c.fp)
    recall = _rate(c.tp, c.tp + c.fn)
    f1 = _rate_f(2.0 * precision * recall, precision + recall)
    return MetricsReport(
        acc=(c.tp + c.tn) / n,
        f1=f1,
        precision=precision,
        recall=recall,
        per_class_recall=[_rate(c.tn, c.tn + c.fp), recall],
        confusion=c,
    )


def _rate_f(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def report_to_json(report: MetricsReport, extra: dict | None = None) -> str:
    """Serialize a report deterministically; keys in the documented fixed order."""
    doc = {
        "acc": report.acc,
        "f1": report.f1,
        "precision": report.precision,
        "recall": report.recall,
        "tp": report.confusion.tp,
        "fp": report.confusion.fp,
        "fn": report.confusion.fn,
        "tn": report.confusion.tn,
        "per_class_recall": list(report.per_class_recall),
    }
    if extra:
        doc.update(extra)
    return dump_json(doc) + "\n"
