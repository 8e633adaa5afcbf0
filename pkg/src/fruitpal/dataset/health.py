"""Dataset health statistics: per-class counts, totals, split balance."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from ..core import ALL_CLASSES, FruitClass
from .manifest import AnnotatedImage, Split


@dataclass(frozen=True)
class HealthReport:
    """Aggregate counts over one manifest.

    `per_class` maps each class to (image count, annotation count), where
    the image count is the number of images containing at least one box of
    that class; an image with two classes counts toward both, so per-class
    image counts may sum past `total_images`. `avg_objects_per_image`
    divides total annotations by the number of annotated images only,
    leaving background-only images out.
    """

    per_class: dict[FruitClass, tuple[int, int]]
    total_images: int
    annotated_images: int
    total_annotations: int
    avg_objects_per_image: float
    per_split_boxes: dict[FruitClass, tuple[int, int, int]]


_SPLIT_SLOT = {Split.TRAINING: 0, Split.VALIDATION: 1, Split.TESTING: 2}


def health_check(dataset: Sequence[AnnotatedImage]) -> HealthReport:
    """Tally the manifest; permutation-invariant over the input list."""
    images_by_class: dict[FruitClass, int] = {c: 0 for c in ALL_CLASSES}
    boxes_by_class: dict[FruitClass, int] = {c: 0 for c in ALL_CLASSES}
    split_boxes: dict[FruitClass, list[int]] = {c: [0, 0, 0] for c in ALL_CLASSES}
    annotated = 0
    total_annotations = 0
    for image in dataset:
        present: set[FruitClass] = set()
        for truth in image.truths:
            boxes_by_class[truth.fruit] += 1
            present.add(truth.fruit)
            slot = _SPLIT_SLOT.get(image.split)
            if slot is not None:
                split_boxes[truth.fruit][slot] += 1
        for fruit in present:
            images_by_class[fruit] += 1
        if image.truths:
            annotated += 1
            total_annotations += len(image.truths)
    avg = total_annotations / annotated if annotated else 0.0
    return HealthReport(
        per_class={c: (images_by_class[c], boxes_by_class[c]) for c in ALL_CLASSES},
        total_images=len(dataset),
        annotated_images=annotated,
        total_annotations=total_annotations,
        avg_objects_per_image=avg,
        per_split_boxes={c: tuple(split_boxes[c]) for c in ALL_CLASSES},
    )


def render_health_text(report: HealthReport) -> str:
    """Health report as an aligned text table."""
    lines = [
        "Dataset health",
        f"  {'Class':<12} {'Images':>8} {'Boxes':>8} {'Train':>8} {'Val':>6} {'Test':>6}",
    ]
    for fruit in ALL_CLASSES:
        images, boxes = report.per_class[fruit]
        train, val, test = report.per_split_boxes[fruit]
        lines.append(
            f"  {fruit.label:<12} {images:>8} {boxes:>8} {train:>8} {val:>6} {test:>6}"
        )
    background = report.total_images - report.annotated_images
    lines += [
        "",
        f"  images total:        {report.total_images}"
        f" ({report.annotated_images} annotated, {background} background-only)",
        f"  annotations total:   {report.total_annotations}",
        f"  avg objects/image:   {report.avg_objects_per_image:.2f}",
    ]
    return "\n".join(lines) + "\n"


def report_to_dict(report: HealthReport) -> dict:
    """Machine-readable health payload."""
    return {
        "total_images": report.total_images,
        "annotated_images": report.annotated_images,
        "total_annotations": report.total_annotations,
        "avg_objects_per_image": report.avg_objects_per_image,
        "per_class": {
            c.label: {"images": img, "annotations": boxes}
            for c, (img, boxes) in report.per_class.items()
        },
        "per_split_boxes": {
            c.label: {"train": t, "val": v, "test": s}
            for c, (t, v, s) in report.per_split_boxes.items()
        },
    }
