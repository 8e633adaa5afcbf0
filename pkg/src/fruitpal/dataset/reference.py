"""Reference tallies for the fruit-allergen image collection, with builders
that synthesize manifests reproducing them exactly.

The collection counts per-class images and annotations, plus per-class box
counts across the train/validation/test splits. Two facts shape the
builders:

* Per-class image counts sum to 3,889 but the collection holds 3,862
  distinct annotated images, because an image may contain several classes.
  The health manifest realizes the difference as 27 two-class images that
  carry both Strawberry and Orange boxes.
* The split box counts are tallied independently of the per-class
  annotation counts and do not reconcile with them class by class (Lemon's
  splits sum to 1,648 against 1,638 annotations), so the split manifest is
  a separate fixture with pre-assigned splits.

Synthesized boxes are laid out deterministically; pixel content never
exists, only geometry.
"""

from __future__ import annotations

from ..core import BoundingBox, FruitClass, GroundTruth
from .manifest import AnnotatedImage, Split

#: (class, image count, annotation count) for the health fixture.
HEALTH_TABLE: tuple[tuple[FruitClass, int, int], ...] = (
    (FruitClass.STRAWBERRY, 630, 3_368),
    (FruitClass.ORANGE, 519, 2_957),
    (FruitClass.LEMON, 426, 1_638),
    (FruitClass.PEAR, 149, 547),
    (FruitClass.PINEAPPLE, 212, 539),
    (FruitClass.GRAPEFRUIT, 92, 429),
    (FruitClass.PEACH, 138, 1_425),
    (FruitClass.BANANA, 471, 1_401),
    (FruitClass.COMMON_FIG, 66, 356),
    (FruitClass.APPLE, 188, 631),
    (FruitClass.GRAPE, 454, 1_546),
    (FruitClass.MANGO, 105, 639),
    (FruitClass.WATERMELON, 223, 660),
    (FruitClass.POMEGRANATE, 131, 343),
    (FruitClass.CANTALOUPE, 85, 283),
)

#: (class, training boxes, validation boxes, testing boxes).
SPLIT_TABLE: tuple[tuple[FruitClass, int, int, int], ...] = (
    (FruitClass.STRAWBERRY, 2_458, 592, 314),
    (FruitClass.ORANGE, 2_019, 607, 321),
    (FruitClass.LEMON, 958, 449, 241),
    (FruitClass.PEAR, 374, 122, 56),
    (FruitClass.PINEAPPLE, 346, 135, 56),
    (FruitClass.GRAPEFRUIT, 342, 65, 29),
    (FruitClass.PEACH, 888, 411, 128),
    (FruitClass.BANANA, 831, 416, 181),
    (FruitClass.COMMON_FIG, 66, 25, 33),
    (FruitClass.APPLE, 397, 122, 107),
    (FruitClass.GRAPE, 1_118, 295, 135),
    (FruitClass.MANGO, 481, 85, 72),
    (FruitClass.WATERMELON, 423, 122, 130),
    (FruitClass.POMEGRANATE, 230, 89, 29),
    (FruitClass.CANTALOUPE, 166, 71, 48),
)

#: Background-only images in the collection.
NULL_IMAGE_COUNT = 170

#: Distinct annotated images (multi-class images counted once).
DISTINCT_ANNOTATED_IMAGES = 3_862

TOTAL_ANNOTATIONS = 16_762

#: Images carrying two classes; exactly the per-class sum minus the
#: distinct total: 3,889 - 3,862.
SHARED_TWO_CLASS_IMAGES = 27

_IMG_W, _IMG_H = 640, 480


def _slug(fruit: FruitClass) -> str:
    return fruit.label.lower().replace(" ", "-")


def _row_box(k: int, n: int) -> BoundingBox:
    """Box k of n, laid out left to right in the upper band."""
    left = k / n
    return BoundingBox(left, 0.25, left + 1 / (2 * n), 0.75)


_SHARED_EXTRA_BOX = BoundingBox(0.1, 0.8, 0.3, 0.95)


def _spread(total: int, images: int) -> list[int]:
    """Split a box total across images, each getting at least the floor."""
    base, extra = divmod(total, images)
    return [base + 1 if i < extra else base for i in range(images)]


def build_health_manifest() -> list[AnnotatedImage]:
    """Manifest whose health report matches `HEALTH_TABLE` exactly.

    The last 27 Strawberry images also carry one Orange box each, so the
    Orange class contributes 27 fewer single-class images; every other
    class is realized with single-class images. Split fields stay
    Unassigned.
    """
    images: list[AnnotatedImage] = []
    shared_orange = {
        (FruitClass.STRAWBERRY, i)
        for i in range(630 - SHARED_TWO_CLASS_IMAGES, 630)
    }
    for fruit, image_count, annotation_count in HEALTH_TABLE:
        if fruit is FruitClass.ORANGE:
            image_count -= SHARED_TWO_CLASS_IMAGES
            annotation_count -= SHARED_TWO_CLASS_IMAGES
        per_image = _spread(annotation_count, image_count)
        for i, n_boxes in enumerate(per_image):
            truths = [
                GroundTruth(fruit=fruit, box=_row_box(k, n_boxes))
                for k in range(n_boxes)
            ]
            if (fruit, i) in shared_orange:
                truths.append(
                    GroundTruth(fruit=FruitClass.ORANGE, box=_SHARED_EXTRA_BOX)
                )
            images.append(
                AnnotatedImage(
                    image_id=f"health-{_slug(fruit)}-{i:04d}",
                    width=_IMG_W,
                    height=_IMG_H,
                    truths=tuple(truths),
                )
            )
    for i in range(NULL_IMAGE_COUNT):
        images.append(
            AnnotatedImage(image_id=f"health-null-{i:04d}", width=_IMG_W, height=_IMG_H)
        )
    return images


_BOXES_PER_SPLIT_IMAGE = 8

_SPLIT_TOKEN = {
    Split.TRAINING: "train",
    Split.VALIDATION: "val",
    Split.TESTING: "test",
}


def build_split_manifest() -> list[AnnotatedImage]:
    """Manifest with pre-assigned splits matching `SPLIT_TABLE` exactly."""
    images: list[AnnotatedImage] = []
    for fruit, train, val, test in SPLIT_TABLE:
        for split, total in (
            (Split.TRAINING, train),
            (Split.VALIDATION, val),
            (Split.TESTING, test),
        ):
            remaining = total
            index = 0
            while remaining > 0:
                n_boxes = min(_BOXES_PER_SPLIT_IMAGE, remaining)
                truths = tuple(
                    GroundTruth(fruit=fruit, box=_row_box(k, n_boxes))
                    for k in range(n_boxes)
                )
                images.append(
                    AnnotatedImage(
                        image_id=f"split-{_slug(fruit)}-{_SPLIT_TOKEN[split]}-{index:04d}",
                        width=_IMG_W,
                        height=_IMG_H,
                        truths=truths,
                        split=split,
                    )
                )
                remaining -= n_boxes
                index += 1
    return images
