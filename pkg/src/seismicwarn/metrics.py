"""AUC, confusion-matrix metrics, class-gain threshold search and PR curve."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .schema import check_scores


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class DerivedMetrics:
    precision: float
    recall: float
    specificity: float
    f1: float
    class_gain: float


@dataclass(frozen=True)
class PRPoint:
    recall: float
    precision: float
    threshold: float


def _check(scores, labels):
    scores = check_scores(scores)
    labels = np.asarray(labels)
    if labels.shape != scores.shape:
        raise ValueError("scores and labels differ in length")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    labels = labels.astype(bool)
    if labels.all() or not labels.any():
        raise ValueError("both classes must be present")
    return scores, labels


def auc_pairwise(scores, labels) -> float:
    """AUC as the fraction of (negative, positive) pairs ranked strictly right.

    Tied pairs count as 0. Quadratic in the number of instances.
    """
    scores, labels = _check(scores, labels)
    neg, pos = scores[~labels], scores[labels]
    hits = 0
    for chunk in np.array_split(pos, max(1, len(pos) // 512)):
        hits += int((neg[:, None] < chunk[None, :]).sum())
    return hits / (len(neg) * len(pos))


def auc_rank(scores, labels, tie_mode: str = "half") -> float:
    """Sort-based AUC.

    ``tie_mode="strict"`` gives tied pairs no credit and equals
    :func:`auc_pairwise`; ``"half"`` gives them 1/2 (the usual ROC AUC).
    """
    if tie_mode not in ("strict", "half"):
        raise ValueError(f"unknown tie mode {tie_mode!r}")
    scores, labels = _check(scores, labels)
    neg = np.sort(scores[~labels])
    pos = scores[labels]
    below = np.searchsorted(neg, pos, side="left")
    hits = int(below.sum())
    if tie_mode == "strict":
        return hits / (len(neg) * len(pos))
    ties = int((np.searchsorted(neg, pos, side="right") - below).sum())
    return (hits + 0.5 * ties) / (len(neg) * len(pos))


def confusion_at(scores, labels, threshold: float) -> ConfusionMatrix:
    """Confusion matrix with prediction 1 iff score >= threshold."""
    scores = check_scores(scores)
    labels = np.asarray(labels).astype(bool)
    if labels.shape != scores.shape:
        raise ValueError("scores and labels differ in length")
    pred = scores >= threshold
    return ConfusionMatrix(
        tp=int((pred & labels).sum()),
        fp=int((pred & ~labels).sum()),
        fn=int((~pred & labels).sum()),
        tn=int((~pred & ~labels).sum()),
    )


def _ratio(a, b) -> float:
    return a / b if b else 0.0


def derived_metrics(cm: ConfusionMatrix) -> DerivedMetrics:
    """Precision, recall, specificity, F1 and class-gain of a confusion matrix.

    Undefined ratios (empty denominators) are reported as 0.
    """
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    specificity = _ratio(cm.tn, cm.tn + cm.fp)
    f1 = _ratio(2 * precision * recall, precision + recall)
    return DerivedMetrics(precision, recall, specificity, f1, specificity + recall - 1)


def _cut_counts(scores, labels):
    """TP and FP when thresholding at each distinct score, highest first."""
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    last = np.r_[np.flatnonzero(np.diff(s) != 0), len(s) - 1]
    tps = np.cumsum(y)[last]
    fps = np.cumsum(~y)[last]
    return s[last], tps, fps


def best_class_gain_threshold(scores, labels) -> tuple[float, float]:
    """Threshold maximising recall + specificity - 1 over all distinct scores.

    Among equally good thresholds the lowest is returned.
    """
    scores, labels = _check(scores, labels)
    thresholds, tps, fps = _cut_counts(scores, labels)
    pos, neg = int(labels.sum()), int((~labels).sum())
    # gain * pos * neg is an integer, so ties are detected exactly
    scaled = tps.astype(np.int64) * neg - fps.astype(np.int64) * pos
    # thresholds run high to low, so the last maximiser is the lowest cut
    i = np.flatnonzero(scaled == scaled.max())[-1]
    return float(thresholds[i]), float(tps[i] / pos - fps[i] / neg)


def pr_curve(scores, labels) -> list[PRPoint]:
    """Precision-recall points, one per distinct threshold.

    Starts with the anchor (recall 0, precision 1), then lowers the
    threshold until every positive is recalled. Recall is non-decreasing.
    """
    scores, labels = _check(scores, labels)
    thresholds, tps, fps = _cut_counts(scores, labels)
    stop = int(np.searchsorted(tps, tps[-1])) + 1
    points = [PRPoint(0.0, 1.0, float("inf"))]
    for t, tp, fp in zip(thresholds[:stop], tps[:stop], fps[:stop]):
        points.append(PRPoint(tp / labels.sum(), tp / (tp + fp), float(t)))
    return points


def metrics_report(scores, labels, threshold: float | None = None, tie_mode: str = "half") -> dict:
    """AUC, best class-gain threshold and the metrics at the chosen threshold."""
    best_t, best_gain = best_class_gain_threshold(scores, labels)
    t = best_t if threshold is None else threshold
    cm = confusion_at(scores, labels, t)
    return {
        "auc": auc_rank(scores, labels, tie_mode),
        "tie_mode": tie_mode,
        "best_threshold": best_t,
        "best_class_gain": best_gain,
        "threshold": t,
        "confusion": asdict(cm),
        "metrics": asdict(derived_metrics(cm)),
    }


def write_pr_curve(points: list[PRPoint], path) -> None:
    with open(path, "w") as fh:
        fh.write("recall,precision\n")
        for p in points:
            fh.write(f"{p.recall!r},{p.precision!r}\n")


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
