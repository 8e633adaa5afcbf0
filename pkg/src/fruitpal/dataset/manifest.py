"""Annotation manifest ingest and persistence.

A manifest is line-delimited JSON, one image per line:

    {"image_id": "img-0001", "width": 640, "height": 480,
     "split": "Training",
     "boxes": [{"class": "Apple", "x_min": 0.1, "y_min": 0.2,
                "x_max": 0.3, "y_max": 0.4}]}

Boxes are corner-form, normalized to [0, 1]. `split` is optional and
defaults to Unassigned. `boxes` may be empty (background-only images).

A second record shape, center-form pixel coordinates, is accepted by the
converter only:

    {"image_id": ..., "width": ..., "height": ...,
     "boxes": [{"class": "Apple", "x_center": 320, "y_center": 240,
                "box_width": 100, "box_height": 80}]}

Center-form coordinates are in pixels and are normalized at conversion,
clamping to the image bounds.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from ..core import BoundingBox, FruitClass, FruitPalError, GroundTruth


class ManifestError(FruitPalError):
    """Malformed manifest content; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class Split(enum.Enum):
    TRAINING = "Training"
    VALIDATION = "Validation"
    TESTING = "Testing"
    UNASSIGNED = "Unassigned"

    @classmethod
    def parse(cls, text: str) -> "Split":
        for member in cls:
            if member.value == text:
                return member
        raise ValueError(f"unknown split: {text!r}")


@dataclass(frozen=True)
class AnnotatedImage:
    """One dataset image with its ground-truth boxes and split assignment."""

    image_id: str
    width: int
    height: int
    truths: tuple[GroundTruth, ...] = ()
    split: Split = Split.UNASSIGNED

    def __post_init__(self):
        if not self.image_id:
            raise ValueError("image_id must be non-empty")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(
                f"image dimensions must be positive, got {self.width}x{self.height}"
            )

    def with_split(self, split: Split) -> "AnnotatedImage":
        return replace(self, split=split)


def _parse_box(raw: object, line: int) -> GroundTruth:
    if not isinstance(raw, dict):
        raise ManifestError("box entry must be an object", line)
    try:
        fruit = FruitClass.parse(str(raw["class"]))
    except KeyError:
        raise ManifestError("box missing 'class'", line) from None
    except ValueError as exc:
        raise ManifestError(str(exc), line) from None
    try:
        coords = {k: float(raw[k]) for k in ("x_min", "y_min", "x_max", "y_max")}
    except KeyError as exc:
        raise ManifestError(f"box missing {exc.args[0]!r}", line) from None
    except (TypeError, ValueError):
        raise ManifestError("box coordinates must be numeric", line) from None
    try:
        box = BoundingBox(**coords)
    except ValueError as exc:
        raise ManifestError(str(exc), line) from None
    return GroundTruth(fruit=fruit, box=box)


def parse_manifest_line(text: str, line: int) -> AnnotatedImage:
    """Parse one manifest record; errors carry the given line number."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"invalid JSON: {exc.msg}", line) from None
    if not isinstance(raw, dict):
        raise ManifestError("record must be an object", line)
    for key in ("image_id", "width", "height"):
        if key not in raw:
            raise ManifestError(f"record missing {key!r}", line)
    split = Split.UNASSIGNED
    if "split" in raw and raw["split"] is not None:
        try:
            split = Split.parse(str(raw["split"]))
        except ValueError as exc:
            raise ManifestError(str(exc), line) from None
    boxes_raw = raw.get("boxes", [])
    if not isinstance(boxes_raw, list):
        raise ManifestError("'boxes' must be an array", line)
    truths = tuple(_parse_box(b, line) for b in boxes_raw)
    try:
        return AnnotatedImage(
            image_id=str(raw["image_id"]),
            width=int(raw["width"]),
            height=int(raw["height"]),
            truths=truths,
            split=split,
        )
    except (TypeError, ValueError) as exc:
        raise ManifestError(str(exc), line) from None


def load_manifest(path: str | Path) -> list[AnnotatedImage]:
    """Read a manifest file; duplicate image ids are rejected."""
    images: list[AnnotatedImage] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            image = parse_manifest_line(text, line_no)
            if image.image_id in seen:
                raise ManifestError(f"duplicate image_id {image.image_id!r}", line_no)
            seen.add(image.image_id)
            images.append(image)
    return images


def image_to_record(image: AnnotatedImage) -> dict:
    record: dict = {
        "image_id": image.image_id,
        "width": image.width,
        "height": image.height,
        "boxes": [
            {
                "class": t.fruit.label,
                "x_min": t.box.x_min,
                "y_min": t.box.y_min,
                "x_max": t.box.x_max,
                "y_max": t.box.y_max,
            }
            for t in image.truths
        ],
    }
    if image.split is not Split.UNASSIGNED:
        record["split"] = image.split.value
    return record


def save_manifest(images: Iterable[AnnotatedImage], path: str | Path) -> None:
    """Write images as a manifest file, one JSON record per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for image in images:
            fh.write(json.dumps(image_to_record(image), sort_keys=True) + "\n")


# --- Center-form pixel converter -------------------------------------------


def center_to_corner(
    x_center: float,
    y_center: float,
    box_width: float,
    box_height: float,
    image_width: int,
    image_height: int,
) -> BoundingBox:
    """Convert one center-form pixel box to a normalized corner-form box.

    Coordinates outside the image clamp to its edges; a box left empty by
    clamping is rejected.
    """
    if box_width <= 0 or box_height <= 0:
        raise ValueError(f"box size must be positive, got {box_width}x{box_height}")
    x_min = max(0.0, (x_center - box_width / 2) / image_width)
    x_max = min(1.0, (x_center + box_width / 2) / image_width)
    y_min = max(0.0, (y_center - box_height / 2) / image_height)
    y_max = min(1.0, (y_center + box_height / 2) / image_height)
    if x_min >= x_max or y_min >= y_max:
        raise ValueError("box lies outside the image")
    return BoundingBox(x_min, y_min, x_max, y_max)


def convert_center_manifest(in_path: str | Path, out_path: str | Path) -> int:
    """Rewrite a center-form pixel manifest in the standard corner form.

    Returns the number of images converted. Errors carry line numbers.
    """
    images: list[AnnotatedImage] = []
    with open(in_path, encoding="utf-8") as fh:
        for line_no, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"invalid JSON: {exc.msg}", line_no) from None
            if not isinstance(raw, dict):
                raise ManifestError("record must be an object", line_no)
            for key in ("image_id", "width", "height"):
                if key not in raw:
                    raise ManifestError(f"record missing {key!r}", line_no)
            width, height = int(raw["width"]), int(raw["height"])
            truths = []
            for b in raw.get("boxes", []):
                try:
                    fruit = FruitClass.parse(str(b["class"]))
                    box = center_to_corner(
                        float(b["x_center"]),
                        float(b["y_center"]),
                        float(b["box_width"]),
                        float(b["box_height"]),
                        width,
                        height,
                    )
                except KeyError as exc:
                    raise ManifestError(
                        f"box missing {exc.args[0]!r}", line_no
                    ) from None
                except ValueError as exc:
                    raise ManifestError(str(exc), line_no) from None
                truths.append(GroundTruth(fruit=fruit, box=box))
            split = Split.UNASSIGNED
            if "split" in raw and raw["split"] is not None:
                try:
                    split = Split.parse(str(raw["split"]))
                except ValueError as exc:
                    raise ManifestError(str(exc), line_no) from None
            images.append(
                AnnotatedImage(
                    image_id=str(raw["image_id"]),
                    width=width,
                    height=height,
                    truths=tuple(truths),
                    split=split,
                )
            )
    save_manifest(images, out_path)
    return len(images)
