"""
Binary-classification evaluation: ROC curves, trapezoidal AUC, TPR at
fixed FPR targets and accuracy at the 0.5 threshold.
"""
import csv
import json
import logging
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from models.artifact import ModelArtifact
from models.evaluation import EvalReport, OperatingPoint, RocCurve, RocPoint
from models.samples import TextSample
from sentinel.artifacts import score_artifact
from sentinel.errors import DataError

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
DEFAULT_FPR_TARGETS = (0.001, 0.007, 0.01, 0.016)


def _as_arrays(scores: Sequence[float], labels: Sequence[int]) -> Tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if s.shape != y.shape or s.ndim != 1:
        raise DataError(f"scores and labels must be equal-length lists ({s.shape} vs {y.shape})")
    if not np.all(np.isin(y, (0, 1))):
        raise DataError("labels must be 0 or 1")
    if y.sum() == 0 or y.sum() == len(y):
        raise DataError("ROC needs both classes")
    return s, y


def trapezoid_auc(fpr: np.ndarray, tpr: np.ndarray) -> float:
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def roc(scores: Sequence[float], labels: Sequence[int]) -> RocCurve:
    """One ROC step per distinct score, thresholds descending, from (0, 0) to (1, 1)."""
    s, y = _as_arrays(scores, labels)
    order = np.argsort(-s, kind="mergesort")
    s_sorted, y_sorted = s[order], y[order]
    last_of_run = np.r_[np.flatnonzero(np.diff(s_sorted)), len(s_sorted) - 1]
    tps = np.cumsum(y_sorted)[last_of_run]
    fps = last_of_run + 1 - tps
    fpr = np.r_[0.0, fps / (len(y) - y.sum())]
    tpr = np.r_[0.0, tps / y.sum()]
    thresholds = np.r_[np.inf, s_sorted[last_of_run]]
    points = [RocPoint(fpr=f, tpr=t, threshold=th) for f, t, th in zip(fpr.tolist(), tpr.tolist(), thresholds.tolist())]
    return RocCurve(points=points, auc=trapezoid_auc(fpr, tpr))


def pairwise_auc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Fraction of correctly ordered (positive, negative) pairs, ties counted half."""
    s, y = _as_arrays(scores, labels)
    pos = s[y == 1][:, None]
    neg = s[y == 0][None, :]
    return float(np.mean((pos > neg) + 0.5 * (pos == neg)))


def tpr_at_fpr(curve: RocCurve, targets: Sequence[float], interpolate: bool = False) -> List[OperatingPoint]:
    """Best TPR reachable without exceeding each target FPR.

    Without interpolation the reported point is a real curve vertex (ties
    resolved towards the smaller FPR). With interpolation the TPR is read
    off the segment crossing the target.
    """
    fpr = np.array([p.fpr for p in curve.points])
    tpr = np.array([p.tpr for p in curve.points])
    thresholds = [p.threshold for p in curve.points]
    operating: List[OperatingPoint] = []
    for target in targets:
        if not 0.0 <= target <= 1.0:
            raise DataError(f"FPR target must lie in [0, 1], got {target}")
        k = int(np.searchsorted(fpr, target, side="right")) - 1
        if interpolate and k + 1 < len(fpr) and fpr[k + 1] > fpr[k]:
            slope = (tpr[k + 1] - tpr[k]) / (fpr[k + 1] - fpr[k])
            operating.append(OperatingPoint(
                target_fpr=target,
                achieved_fpr=target,
                tpr=float(tpr[k] + (target - fpr[k]) * slope),
                threshold=thresholds[k],
            ))
            continue
        j = int(np.flatnonzero(tpr == tpr[k])[0])
        operating.append(OperatingPoint(
            target_fpr=target, achieved_fpr=float(fpr[j]), tpr=float(tpr[j]), threshold=thresholds[j],
        ))
    return operating


def accuracy(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Accuracy with score >= 0.5 classified positive."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    return float(np.mean((s >= 0.5) == (y == 1)))


def evaluate_scores(
    scores: Sequence[float],
    labels: Sequence[int],
    targets: Sequence[float] = DEFAULT_FPR_TARGETS,
    interpolate: bool = False,
    model_type: str = "",
) -> Tuple[EvalReport, RocCurve]:
    curve = roc(scores, labels)
    positives = int(np.sum(labels))
    report = EvalReport(
        auc=curve.auc,
        accuracy=accuracy(scores, labels),
        operating_points=tpr_at_fpr(curve, targets, interpolate),
        counts={"benign": len(labels) - positives, "malicious": positives},
        model_type=model_type,
    )
    logger.info("Evaluated %d samples: auc=%.6f accuracy=%.4f", len(labels), report.auc, report.accuracy)
    return report, curve


def evaluate(
    artifact: ModelArtifact,
    test: Sequence[TextSample],
    targets: Sequence[float] = DEFAULT_FPR_TARGETS,
    interpolate: bool = False,
) -> Tuple[EvalReport, RocCurve]:
    scores = score_artifact(artifact, [s.text for s in test])
    return evaluate_scores(scores, [s.label for s in test], targets, interpolate, artifact.model_type.value)


def write_roc_csv(curve: RocCurve, path: PathLike) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["fpr", "tpr", "threshold"])
        for point in curve.points:
            writer.writerow([repr(point.fpr), repr(point.tpr), repr(point.threshold)])


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def write_report_json(report: EvalReport, path: PathLike) -> None:
    Path(path).write_text(report_to_json(report), encoding="utf-8")
