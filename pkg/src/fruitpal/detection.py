"""Pluggable detector seam with a deterministic scripted backend.

The real object-detection model is out of scope; the scripted backend
replays per-frame detection fixtures so the surrounding pipelines stay
fully testable. Post-processing (threshold filter, NMS, inventory
counting) is shared by all backends.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

from .core import BoundingBox, Detection, FruitClass, FruitInventory, FruitPalError
from .evaluation import iou


class FrameNotFound(FruitPalError):
    """A frame id was not present in the active fixture set."""


@dataclass(frozen=True)
class FrameRef:
    """Reference to a captured frame inside a scenario's fixture set."""

    frame_id: str
    timestamp: int = 0


class DetectorBackend(Protocol):
    """Behavioral interface: raw detections for a frame reference.

    Backends must be deterministic: the same frame reference always yields
    the same output. Backends are read-only after load, so concurrent
    calls are permitted.
    """

    def raw_detections(self, frame: FrameRef) -> Sequence[Detection]: ...


class ScriptedDetector:
    """Detector backend that replays fixture detections per frame id."""

    def __init__(self, fixtures: Mapping[str, Sequence[Detection]]):
        self._fixtures: dict[str, tuple[Detection, ...]] = {
            frame_id: tuple(dets) for frame_id, dets in fixtures.items()
        }

    def raw_detections(self, frame: FrameRef) -> tuple[Detection, ...]:
        try:
            return self._fixtures[frame.frame_id]
        except KeyError:
            raise FrameNotFound(f"unknown frame_id: {frame.frame_id!r}") from None

    def frame_ids(self) -> tuple[str, ...]:
        return tuple(self._fixtures)

    def __contains__(self, frame_id: str) -> bool:
        return frame_id in self._fixtures

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedDetector":
        return cls(load_frame_fixtures(path))


def detect(backend: DetectorBackend, frame: FrameRef, conf_threshold: float) -> list[Detection]:
    """Detections for `frame` with confidence >= `conf_threshold`.

    Returned in descending confidence; ties keep fixture order.
    """
    if not (0.0 <= conf_threshold <= 1.0):
        raise ValueError(f"conf_threshold out of range: {conf_threshold}")
    dets = [d for d in backend.raw_detections(frame) if d.confidence >= conf_threshold]
    return sorted(dets, key=lambda d: -d.confidence)


def non_max_suppression(detections: Sequence[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy per-class NMS, descending confidence.

    A detection is suppressed when some already-kept detection of the same
    class overlaps it with IoU strictly above `iou_threshold`. Confidence
    ties break toward the earlier input index.
    """
    if not (0.0 <= iou_threshold <= 1.0):
        raise ValueError(f"iou_threshold out of range: {iou_threshold}")
    order = sorted(range(len(detections)), key=lambda i: (-detections[i].confidence, i))
    kept: list[Detection] = []
    for i in order:
        cand = detections[i]
        if any(
            k.fruit is cand.fruit and iou(k.box, cand.box) > iou_threshold
            for k in kept
        ):
            continue
        kept.append(cand)
    return kept


def to_inventory(detections: Iterable[Detection]) -> FruitInventory:
    """Count detections per class."""
    counts: dict[FruitClass, int] = {}
    for d in detections:
        counts[d.fruit] = counts.get(d.fruit, 0) + 1
    return FruitInventory(counts)


# --- Fixture file format ---------------------------------------------------
#
# Line-delimited JSON, one frame per line:
#   {"frame_id": "plate-0",
#    "detections": [{"class": "Apple", "x_min": 0.1, "y_min": 0.1,
#                    "x_max": 0.3, "y_max": 0.3, "confidence": 0.9}, ...]}
# Detection order inside a frame is the fixture order used for tie-breaks.


class FixtureError(FruitPalError):
    """Malformed detection fixture file."""


def _parse_detection(rec: Mapping, where: str) -> Detection:
    try:
        fruit = FruitClass.parse(rec["class"])
        box = BoundingBox(
            float(rec["x_min"]), float(rec["y_min"]),
            float(rec["x_max"]), float(rec["y_max"]),
        )
        return Detection(fruit, box, float(rec["confidence"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FixtureError(f"{where}: {exc}") from None


def load_frame_fixtures(path: str | Path) -> dict[str, tuple[Detection, ...]]:
    """Load a detection fixture file, preserving per-frame order."""
    fixtures: dict[str, tuple[Detection, ...]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FixtureError(f"{where}: invalid JSON: {exc}") from None
            if not isinstance(rec, dict) or "frame_id" not in rec:
                raise FixtureError(f"{where}: expected an object with a frame_id")
            frame_id = str(rec["frame_id"])
            if frame_id in fixtures:
                raise FixtureError(f"{where}: duplicate frame_id {frame_id!r}")
            dets = rec.get("detections", [])
            if not isinstance(dets, list):
                raise FixtureError(f"{where}: detections must be a list")
            fixtures[frame_id] = tuple(_parse_detection(d, where) for d in dets)
    return fixtures


def dump_frame_fixtures(fixtures: Mapping[str, Sequence[Detection]], path: str | Path) -> None:
    """Write fixtures in the line-delimited format read by `load_frame_fixtures`."""
    with open(path, "w", encoding="utf-8") as fh:
        for frame_id, dets in fixtures.items():
            rec = {
                "frame_id": frame_id,
                "detections": [
                    {
                        "class": d.fruit.label,
                        "x_min": d.box.x_min,
                        "y_min": d.box.y_min,
                        "x_max": d.box.x_max,
                        "y_max": d.box.y_max,
                        "confidence": d.confidence,
                    }
                    for d in dets
                ],
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
