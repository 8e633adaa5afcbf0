"""Detection-quality metrics: IoU, greedy matching, PR curves, AP, mAP.

Conventions, fixed for determinism:

* Matching is greedy over predictions in descending confidence; confidence
  ties break by input order. Each prediction takes the unmatched truth with
  the highest IoU at or above the threshold; IoU ties break toward the
  lowest truth index.
* AP uses 101-point interpolation: the mean over the recall grid
  {0.00, 0.01, ..., 1.00} of the maximum precision at recall >= r.
* mAP averages per-class AP, unweighted, over classes with at least one
  ground truth. mAP50-95 averages mAP over IoU thresholds 0.50..0.95
  in steps of 0.05.
* The confusion matrix is 16x16 (15 classes plus background, in vocabulary
  order with background last). Its matching ignores the class gate, so
  cross-class confusions land in off-diagonal cells.

All functions are pure; results never depend on evaluation order.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .core import ALL_CLASSES, BoundingBox, Detection, FruitClass, GroundTruth

#: Recall grid for interpolated AP.
RECALL_GRID: tuple[float, ...] = tuple(i / 100 for i in range(101))

#: IoU thresholds averaged by mAP50-95.
IOU_SWEEP: tuple[float, ...] = tuple(t / 100 for t in range(50, 100, 5))

#: Index of the background row/column in the confusion matrix.
BACKGROUND = len(ALL_CLASSES)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes; 0 when disjoint."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union


@dataclass(frozen=True)
class MatchResult:
    """Outcome of greedy prediction/truth assignment for one collection."""

    pairs: tuple[tuple[int, int, float], ...]  # (pred index, truth index, IoU)
    unmatched_detections: tuple[int, ...]
    unmatched_truths: tuple[int, ...]


def _greedy_order(preds: Sequence[Detection]) -> list[int]:
    return sorted(range(len(preds)), key=lambda i: (-preds[i].confidence, i))


def match_detections(
    preds: Sequence[Detection],
    truths: Sequence[GroundTruth],
    iou_threshold: float,
    *,
    class_gated: bool = True,
) -> MatchResult:
    """Greedily assign predictions to ground truths.

    With `class_gated` (the default) a prediction may only match a truth of
    its own class; the confusion matrix uses the ungated variant.
    """
    if not (0.0 <= iou_threshold <= 1.0):
        raise ValueError(f"iou_threshold out of range: {iou_threshold}")
    taken = [False] * len(truths)
    pairs: list[tuple[int, int, float]] = []
    unmatched_preds: list[int] = []
    for pi in _greedy_order(preds):
        pred = preds[pi]
        best_iou = 0.0
        best_ti = -1
        for ti, truth in enumerate(truths):
            if taken[ti]:
                continue
            if class_gated and truth.fruit is not pred.fruit:
                continue
            overlap = iou(pred.box, truth.box)
            if overlap >= iou_threshold and overlap > best_iou:
                best_iou = overlap
                best_ti = ti
        if best_ti >= 0:
            taken[best_ti] = True
            pairs.append((pi, best_ti, best_iou))
        else:
            unmatched_preds.append(pi)
    unmatched_truths = [ti for ti, t in enumerate(taken) if not t]
    return MatchResult(tuple(pairs), tuple(sorted(unmatched_preds)), tuple(unmatched_truths))


@dataclass(frozen=True)
class PRCurve:
    """Precision/recall swept over detections in descending confidence.

    `points[k]` is (recall, precision) after the first k+1 detections;
    recall is non-decreasing along the list.
    """

    points: tuple[tuple[float, float], ...]


def pr_curve(tp_flags: Sequence[bool], n_truths: int) -> PRCurve:
    """Build the PR curve from a confidence-ordered TP/FP sequence."""
    points: list[tuple[float, float]] = []
    tp = 0
    for k, flag in enumerate(tp_flags, start=1):
        if flag:
            tp += 1
        recall = tp / n_truths if n_truths else 0.0
        points.append((recall, tp / k))
    return PRCurve(tuple(points))


def average_precision(curve: PRCurve) -> float:
    """101-point interpolated AP of a PR curve.

    An empty curve scores 0, covering the no-detections case.
    """
    if not curve.points:
        return 0.0
    total = 0.0
    for r in RECALL_GRID:
        best = 0.0
        for recall, precision in curve.points:
            if recall >= r and precision > best:
                best = precision
        total += best
    return total / len(RECALL_GRID)


def _pooled_class_curve(
    preds_by_image: Mapping[str, Sequence[Detection]],
    truths_by_image: Mapping[str, Sequence[GroundTruth]],
    fruit: FruitClass,
    iou_threshold: float,
) -> tuple[PRCurve, int]:
    """Pooled PR curve for one class over the whole dataset.

    Matching runs per image; the TP/FP sequence is ordered by confidence
    across images (ties: image iteration order, then intra-image order).
    """
    image_ids = list(truths_by_image)
    image_ids += [i for i in preds_by_image if i not in truths_by_image]
    records: list[tuple[float, int, int, bool]] = []  # (-conf, img pos, idx, tp)
    n_truths = 0
    for pos, image_id in enumerate(image_ids):
        preds = [d for d in preds_by_image.get(image_id, ()) if d.fruit is fruit]
        truths = [t for t in truths_by_image.get(image_id, ()) if t.fruit is fruit]
        n_truths += len(truths)
        matched = {pi for pi, _, _ in match_detections(preds, truths, iou_threshold).pairs}
        for idx, det in enumerate(preds):
            records.append((-det.confidence, pos, idx, idx in matched))
    records.sort(key=lambda r: (r[0], r[1], r[2]))
    flags = [tp for _, _, _, tp in records]
    return pr_curve(flags, n_truths), n_truths


def map_at(
    preds_by_image: Mapping[str, Sequence[Detection]],
    truths_by_image: Mapping[str, Sequence[GroundTruth]],
    iou_threshold: float,
) -> tuple[dict[FruitClass, float], float]:
    """Per-class AP over the pooled dataset and their unweighted mean.

    Classes without any ground truth are excluded from both the map and
    the mean; a dataset with no truths at all scores 0.
    """
    per_class: dict[FruitClass, float] = {}
    for fruit in ALL_CLASSES:
        curve, n_truths = _pooled_class_curve(
            preds_by_image, truths_by_image, fruit, iou_threshold
        )
        if n_truths == 0:
            continue
        per_class[fruit] = average_precision(curve)
    mean = sum(per_class.values()) / len(per_class) if per_class else 0.0
    return per_class, mean


def map_50_95(
    preds_by_image: Mapping[str, Sequence[Detection]],
    truths_by_image: Mapping[str, Sequence[GroundTruth]],
) -> float:
    """Mean of `map_at` over the 10 IoU thresholds 0.50, 0.55, ..., 0.95."""
    total = 0.0
    for threshold in IOU_SWEEP:
        total += map_at(preds_by_image, truths_by_image, threshold)[1]
    return total / len(IOU_SWEEP)


def confusion_matrix(
    preds: Sequence[Detection],
    truths: Sequence[GroundTruth],
    conf_threshold: float,
    iou_threshold: float,
) -> np.ndarray:
    """Class-vs-class tally for one image collection, background included.

    Rows are true classes, columns predicted classes; index 15 is
    background. Matching ignores the class gate, so a Banana prediction
    sitting on an Apple truth lands in (Apple, Banana).
    """
    if not (0.0 <= conf_threshold <= 1.0):
        raise ValueError(f"conf_threshold out of range: {conf_threshold}")
    kept = [d for d in preds if d.confidence >= conf_threshold]
    result = match_detections(kept, truths, iou_threshold, class_gated=False)
    matrix = np.zeros((BACKGROUND + 1, BACKGROUND + 1), dtype=np.int64)
    order = {c: i for i, c in enumerate(ALL_CLASSES)}
    for pi, ti, _ in result.pairs:
        matrix[order[truths[ti].fruit], order[kept[pi].fruit]] += 1
    for pi in result.unmatched_detections:
        matrix[BACKGROUND, order[kept[pi].fruit]] += 1
    for ti in result.unmatched_truths:
        matrix[order[truths[ti].fruit], BACKGROUND] += 1
    return matrix


@dataclass(frozen=True)
class EvalReport:
    """Dataset-level evaluation summary."""

    per_class_ap: dict[FruitClass, float]
    map50: float
    map50_95: float
    precision: float
    recall: float
    confusion: np.ndarray
    conf_threshold: float = 0.25
    iou_threshold: float = 0.5
    counts: dict[str, int] = field(default_factory=dict)


def evaluate_dataset(
    preds_by_image: Mapping[str, Sequence[Detection]],
    truths_by_image: Mapping[str, Sequence[GroundTruth]],
    conf_threshold: float = 0.25,
    iou_threshold: float = 0.5,
) -> EvalReport:
    """Full report: per-class AP, mAP50, mAP50-95, P/R, confusion matrix.

    Dataset precision and recall use class-gated matching at the given
    operating point (defaults 0.25 confidence, 0.5 IoU).
    """
    per_class_ap, map50 = map_at(preds_by_image, truths_by_image, 0.5)
    overall_50_95 = map_50_95(preds_by_image, truths_by_image)

    image_ids = list(truths_by_image)
    image_ids += [i for i in preds_by_image if i not in truths_by_image]
    tp = fp = fn = 0
    confusion = np.zeros((BACKGROUND + 1, BACKGROUND + 1), dtype=np.int64)
    for image_id in image_ids:
        preds = [
            d for d in preds_by_image.get(image_id, ())
            if d.confidence >= conf_threshold
        ]
        truths = list(truths_by_image.get(image_id, ()))
        result = match_detections(preds, truths, iou_threshold)
        tp += len(result.pairs)
        fp += len(result.unmatched_detections)
        fn += len(result.unmatched_truths)
        confusion += confusion_matrix(preds, truths, conf_threshold, iou_threshold)

    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    return EvalReport(
        per_class_ap=per_class_ap,
        map50=map50,
        map50_95=overall_50_95,
        precision=precision,
        recall=recall,
        confusion=confusion,
        conf_threshold=conf_threshold,
        iou_threshold=iou_threshold,
        counts={"tp": tp, "fp": fp, "fn": fn},
    )


# --- Report rendering ------------------------------------------------------

CONFUSION_LABELS: tuple[str, ...] = tuple(c.label for c in ALL_CLASSES) + ("background",)


def report_to_dict(report: EvalReport) -> dict:
    """Machine-readable report payload."""
    return {
        "precision": report.precision,
        "recall": report.recall,
        "map50": report.map50,
        "map50_95": report.map50_95,
        "conf_threshold": report.conf_threshold,
        "iou_threshold": report.iou_threshold,
        "counts": dict(report.counts),
        "per_class_ap": {c.label: ap for c, ap in report.per_class_ap.items()},
        "confusion_labels": list(CONFUSION_LABELS),
        "confusion": report.confusion.tolist(),
    }


def report_to_json(report: EvalReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True)


def render_report_text(report: EvalReport) -> str:
    """Human-readable report table."""
    lines = [
        "Detection evaluation",
        f"  operating point: conf >= {report.conf_threshold}, IoU >= {report.iou_threshold}",
        f"  precision: {report.precision:.4f}",
        f"  recall:    {report.recall:.4f}",
        f"  mAP50:     {report.map50:.4f}",
        f"  mAP50-95:  {report.map50_95:.4f}",
        "",
        f"  {'Class':<12} {'AP50':>8}",
    ]
    for fruit, ap in report.per_class_ap.items():
        lines.append(f"  {fruit.label:<12} {ap:>8.4f}")
    return "\n".join(lines) + "\n"


def confusion_to_csv(confusion: np.ndarray) -> str:
    """Confusion matrix as CSV with header row/column labels."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["true\\pred", *CONFUSION_LABELS])
    for label, row in zip(CONFUSION_LABELS, confusion.tolist()):
        writer.writerow([label, *row])
    return buf.getvalue()
