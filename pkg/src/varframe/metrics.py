"""Binary classification metrics at a threshold, plus PR and ROC sweeps.

Label 1 (malignant) is the positive class.  A prediction is positive when its
score strictly exceeds the threshold.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyInputError, UndefinedMetricError

METRIC_KEYS = ("accuracy", "precision", "sensitivity", "specificity", "f1", "auc", "ap", "tp", "tn", "fp", "fn")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class CurvePoint:
    x: float
    y: float
    threshold: float


def _ranked(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if s.size == 0:
        raise EmptyInputError("no predictions")
    if s.shape != y.shape:
        raise ValueError(f"{s.size} scores but {y.size} labels")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    return s, y


def confusion_at_threshold(scores: Sequence[float], labels: Sequence[int], threshold: float = 0.5) -> ConfusionMatrix:
    s, y = _ranked(scores, labels)
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    pos = s > threshold
    return ConfusionMatrix(
        tp=int(np.sum(pos & (y == 1))),
        tn=int(np.sum(~pos & (y == 0))),
        fp=int(np.sum(pos & (y == 0))),
        fn=int(np.sum(~pos & (y == 1))),
    )


def _ratio(num: int, den: int, name: str) -> float:
    if den == 0:
        raise UndefinedMetricError(f"{name} is undefined: zero denominator")
    return num / den


def accuracy(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp + cm.tn, cm.total, "accuracy")


def precision(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp, cm.tp + cm.fp, "precision")


def sensitivity(cm: ConfusionMatrix) -> float:
    # recall over actual positives
    return _ratio(cm.tp, cm.tp + cm.fn, "sensitivity")


def specificity(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tn, cm.fp + cm.tn, "specificity")


def f1(cm: ConfusionMatrix) -> float:
    return f1_from(precision(cm), sensitivity(cm))


def f1_from(prec: float, sens: float) -> float:
    if prec + sens == 0:
        raise UndefinedMetricError("f1 is undefined: precision and sensitivity are both zero")
    return 2 * sens * prec / (sens + prec)


def normalized_confusion(cm: ConfusionMatrix) -> np.ndarray:
    """Row-normalised matrix, rows = true class: [[tn, fp], [fn, tp]] / row totals."""
    m = np.array([[cm.tn, cm.fp], [cm.fn, cm.tp]], dtype=np.float64)
    totals = m.sum(axis=1, keepdims=True)
    if np.any(totals == 0):
        raise UndefinedMetricError("a true class has no samples")
    return m / totals


def _sweep(s: np.ndarray, y: np.ndarray):
    """Cumulative (tp, fp) counts when predicting positive for score >= each distinct score, high to low."""
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    tp = np.cumsum(y)
    fp = np.cumsum(1 - y)
    # keep the last index of each run of equal scores
    last = np.r_[np.nonzero(np.diff(s))[0], s.size - 1]
    return s[last], tp[last], fp[last]


def pr_curve(scores, labels) -> list[CurvePoint]:
    """(recall, precision) at every distinct score, in order of increasing recall."""
    s, y = _ranked(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise UndefinedMetricError("PR curve needs at least one positive")
    thr, tp, fp = _sweep(s, y)
    return [CurvePoint(tp[k] / n_pos, tp[k] / (tp[k] + fp[k]), float(thr[k])) for k in range(thr.size)]


def average_precision(scores, labels) -> float:
    """Step-wise sum of (R_k - R_{k-1}) * P_k over the threshold sweep."""
    ap, prev_recall = 0.0, 0.0
    for p in pr_curve(scores, labels):
        ap += (p.x - prev_recall) * p.y
        prev_recall = p.x
    return ap


def roc_curve(scores, labels) -> list[CurvePoint]:
    """(fpr, tpr) from (0, 0) to (1, 1); the origin carries an infinite threshold."""
    s, y = _ranked(scores, labels)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC curve needs both positives and negatives")
    thr, tp, fp = _sweep(s, y)
    points = [CurvePoint(0.0, 0.0, math.inf)]
    points += [CurvePoint(fp[k] / n_neg, tp[k] / n_pos, float(thr[k])) for k in range(thr.size)]
    return points


def auc(scores, labels) -> float:
    pts = roc_curve(scores, labels)
    return sum((b.x - a.x) * (a.y + b.y) / 2 for a, b in zip(pts, pts[1:]))


def prob_distribution(scores, labels, threshold: float = 0.5) -> dict[str, list[float]]:
    s, y = _ranked(scores, labels)
    pos = s > threshold
    buckets = {
        "TP": pos & (y == 1),
        "TN": ~pos & (y == 0),
        "FP": pos & (y == 0),
        "FN": ~pos & (y == 1),
    }
    return {k: s[mask].tolist() for k, mask in buckets.items()}


# ---------------------------------------------------------------- reports


def _safe(fn, *args):
    try:
        return fn(*args)
    except UndefinedMetricError:
        return None


def metric_report(scores, labels, threshold: float = 0.5) -> dict[str, float | int | None]:
    """All documented keys; undefined values are ``None``."""
    cm = confusion_at_threshold(scores, labels, threshold)
    return {
        "accuracy": _safe(accuracy, cm),
        "precision": _safe(precision, cm),
        "sensitivity": _safe(sensitivity, cm),
        "specificity": _safe(specificity, cm),
        "f1": _safe(f1, cm),
        "auc": _safe(auc, scores, labels),
        "ap": _safe(average_precision, scores, labels),
        "tp": cm.tp,
        "tn": cm.tn,
        "fp": cm.fp,
        "fn": cm.fn,
    }


def mean_report(reports: Iterable[dict]) -> dict[str, float | None]:
    """Per-key mean over fold reports, skipping undefined entries."""
    reports = list(reports)
    out: dict[str, float | None] = {}
    for key in METRIC_KEYS:
        vals = [r[key] for r in reports if r.get(key) is not None]
        out[key] = float(np.mean(vals)) if vals else None
    return out


def format_value(v) -> str:
    if v is None:
        return "undefined"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{v:.9g}"


def write_curve_csv(path: str | Path, points: Iterable[CurvePoint]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "threshold"])
        for p in points:
            w.writerow([format_value(p.x), format_value(p.y), format_value(p.threshold)])


def read_curve_csv(path: str | Path) -> list[CurvePoint]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [CurvePoint(float(r["x"]), float(r["y"]), float(r["threshold"])) for r in csv.DictReader(fh)]


def write_keyvalue(path: str | Path, report: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in report.items():
            fh.write(f"{k}={format_value(v)}\n")


def write_json(path: str | Path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def write_distribution_csv(path: str | Path, buckets: dict[str, list[float]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bucket", "score"])
        for name, scores in buckets.items():
            for s in scores:
                w.writerow([name, format_value(s)])
