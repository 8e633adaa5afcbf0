"""Brute-force reference implementations of the detection metrics.

Everything here is written straight from the definitions, with no shared
code or shortcuts from the library implementation. Tests compare the two
against each other on randomized inputs.
"""

from __future__ import annotations

from fruitpal.core import ALL_CLASSES, BoundingBox, Detection, FruitClass, GroundTruth

BACKGROUND = 15


def o_iou(a: BoundingBox, b: BoundingBox) -> float:
    ix = max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
    iy = max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
    inter = ix * iy
    if inter <= 0.0:
        return 0.0
    area_a = (a.x_max - a.x_min) * (a.y_max - a.y_min)
    area_b = (b.x_max - b.x_min) * (b.y_max - b.y_min)
    return inter / (area_a + area_b - inter)


def o_match(
    preds: list[Detection],
    truths: list[GroundTruth],
    threshold: float,
    *,
    class_gated: bool = True,
) -> list[tuple[int, int, float]]:
    """Greedy matching; returns (pred_index, truth_index, iou) triples.

    Detections are visited in confidence-descending order, input order
    breaking confidence ties. Each takes the unmatched truth with the
    highest IoU at or above the threshold, lowest truth index on IoU ties.
    """
    order = sorted(range(len(preds)), key=lambda i: (-preds[i].confidence, i))
    taken: set[int] = set()
    pairs = []
    for pi in order:
        det = preds[pi]
        best_ti = -1
        best_iou = -1.0
        for ti, truth in enumerate(truths):
            if ti in taken:
                continue
            if class_gated and truth.fruit is not det.fruit:
                continue
            v = o_iou(det.box, truth.box)
            if v <= 0.0:
                continue
            if v >= threshold and v > best_iou:
                best_iou = v
                best_ti = ti
        if best_ti >= 0:
            taken.add(best_ti)
            pairs.append((pi, best_ti, best_iou))
    return pairs


def o_class_ap(
    preds_by_image: dict[str, list[Detection]],
    truths_by_image: dict[str, list[GroundTruth]],
    fruit: FruitClass,
    threshold: float,
) -> float | None:
    """101-point interpolated AP for one class, or None with no truths."""
    image_order = list(truths_by_image)
    for img in preds_by_image:
        if img not in truths_by_image:
            image_order.append(img)

    n_truths = 0
    pooled: list[tuple[float, int, int, bool]] = []  # (-conf, img pos, idx, is_tp)
    for pos, img in enumerate(image_order):
        truths = [t for t in truths_by_image.get(img, []) if t.fruit is fruit]
        n_truths += len(truths)
        dets = [
            (i, d)
            for i, d in enumerate(preds_by_image.get(img, []))
            if d.fruit is fruit
        ]
        matched = {
            pi
            for pi, _, _ in o_match(
                [d for _, d in dets], truths, threshold, class_gated=True
            )
        }
        for j, (orig_idx, det) in enumerate(dets):
            pooled.append((-det.confidence, pos, orig_idx, j in matched))

    if n_truths == 0:
        return None
    pooled.sort(key=lambda row: (row[0], row[1], row[2]))

    points = []
    tp = fp = 0
    for _, _, _, is_tp in pooled:
        if is_tp:
            tp += 1
        else:
            fp += 1
        points.append((tp / n_truths, tp / (tp + fp)))

    total = 0.0
    for i in range(101):
        r = i / 100
        best = 0.0
        for recall, precision in points:
            if recall >= r and precision > best:
                best = precision
        total += best
    return total / 101


def o_map_at(preds_by_image, truths_by_image, threshold):
    per_class = {}
    for fruit in ALL_CLASSES:
        ap = o_class_ap(preds_by_image, truths_by_image, fruit, threshold)
        if ap is not None:
            per_class[fruit] = ap
    mean = sum(per_class.values()) / len(per_class) if per_class else 0.0
    return per_class, mean


def o_map_50_95(preds_by_image, truths_by_image):
    sweep = [t / 100 for t in range(50, 100, 5)]
    means = [o_map_at(preds_by_image, truths_by_image, t)[1] for t in sweep]
    return sum(means) / len(means)


def o_confusion(
    preds: list[Detection],
    truths: list[GroundTruth],
    conf_threshold: float,
    iou_threshold: float,
) -> list[list[int]]:
    """16x16 counts, rows = truth class, cols = predicted, 15 = background.

    Matching ignores class so cross-class confusions land off-diagonal.
    """
    col = {c: i for i, c in enumerate(ALL_CLASSES)}
    kept = [d for d in preds if d.confidence >= conf_threshold]
    pairs = o_match(kept, truths, iou_threshold, class_gated=False)
    grid = [[0] * 16 for _ in range(16)]
    matched_p = set()
    matched_t = set()
    for pi, ti, _ in pairs:
        grid[col[truths[ti].fruit]][col[kept[pi].fruit]] += 1
        matched_p.add(pi)
        matched_t.add(ti)
    for pi, det in enumerate(kept):
        if pi not in matched_p:
            grid[BACKGROUND][col[det.fruit]] += 1
    for ti, truth in enumerate(truths):
        if ti not in matched_t:
            grid[col[truth.fruit]][BACKGROUND] += 1
    return grid


def o_precision_recall(
    preds_by_image,
    truths_by_image,
    conf_threshold: float,
    iou_threshold: float,
) -> tuple[float, float]:
    """Dataset-level class-gated precision and recall at fixed thresholds."""
    tp = n_kept = n_truths = 0
    for img in set(preds_by_image) | set(truths_by_image):
        kept = [
            d
            for d in preds_by_image.get(img, [])
            if d.confidence >= conf_threshold
        ]
        truths = truths_by_image.get(img, [])
        pairs = o_match(kept, truths, iou_threshold, class_gated=True)
        tp += len(pairs)
        n_kept += len(kept)
        n_truths += len(truths)
    precision = tp / n_kept if n_kept else 0.0
    recall = tp / n_truths if n_truths else 0.0
    return precision, recall
