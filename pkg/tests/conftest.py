"""Shared fixtures and builders for the test suite."""

from __future__ import annotations

import json
import random
from pathlib import Path

import pytest
from hypothesis import strategies as st

from fruitpal.core import ALL_CLASSES, BoundingBox, Detection, FruitClass, GroundTruth

# A coarse coordinate grid makes IoU ties and exact-threshold collisions
# far more likely than uniform floats would.
GRID = [i / 8 for i in range(9)]


def grid_box(rng: random.Random) -> BoundingBox:
    x0, x1 = sorted(rng.sample(GRID, 2))
    y0, y1 = sorted(rng.sample(GRID, 2))
    return BoundingBox(x0, y0, x1, y1)


def random_instance(rng: random.Random, *, max_images: int = 2, max_objects: int = 6, n_classes: int = 3):
    """One evaluation problem: predictions and truths keyed by image id.

    Object counts are per instance (summed over images), never above
    ``max_objects`` for either side.
    """
    classes = ALL_CLASSES[:n_classes]
    n_images = rng.randint(1, max_images)
    image_ids = [f"img-{i}" for i in range(n_images)]
    preds: dict[str, list[Detection]] = {i: [] for i in image_ids}
    truths: dict[str, list[GroundTruth]] = {i: [] for i in image_ids}
    for _ in range(rng.randint(0, max_objects)):
        img = rng.choice(image_ids)
        conf = rng.choice([0.1, 0.25, 0.5, 0.5, 0.75, 0.9])
        preds[img].append(Detection(rng.choice(classes), grid_box(rng), conf))
    for _ in range(rng.randint(0, max_objects)):
        img = rng.choice(image_ids)
        truths[img].append(GroundTruth(rng.choice(classes), grid_box(rng)))
    return preds, truths


@st.composite
def boxes(draw) -> BoundingBox:
    # Box corners on a 1/16 grid: ties and exact-threshold hits are common.
    x0, x1 = sorted(draw(st.permutations(range(17)).map(lambda p: p[:2])))
    y0, y1 = sorted(draw(st.permutations(range(17)).map(lambda p: p[:2])))
    return BoundingBox(x0 / 16, y0 / 16, x1 / 16, y1 / 16)


fruit_classes = st.sampled_from(ALL_CLASSES)

detections = st.builds(
    Detection,
    fruit=fruit_classes,
    box=boxes(),
    confidence=st.sampled_from([i / 20 for i in range(21)]),
)

ground_truths = st.builds(GroundTruth, fruit=fruit_classes, box=boxes())


# -- scenario directory builders ------------------------------------------

PLATE_BOXES = {
    # frame_id -> class label -> count
    "plate-0": {"Apple": 2, "Banana": 1, "Strawberry": 3},
    "plate-1": {"Apple": 1, "Banana": 1, "Strawberry": 3},
    "plate-2": {"Apple": 1, "Banana": 1, "Strawberry": 3, "Mango": 2},
    "plate-3": {"Apple": 1, "Banana": 1, "Strawberry": 2, "Mango": 2},
}


def _frame_record(frame_id: str, counts: dict[str, int], confidence: float = 0.9) -> dict:
    dets = []
    k = 0
    for label, n in counts.items():
        for _ in range(n):
            dets.append(
                {
                    "class": label,
                    "x_min": k * 0.06,
                    "y_min": 0.1,
                    "x_max": k * 0.06 + 0.05,
                    "y_max": 0.2,
                    "confidence": confidence,
                }
            )
            k += 1
    return {"frame_id": frame_id, "detections": dets}


def write_frames(path: Path, records: list[dict]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def write_nutrition_scenario(root: Path) -> Path:
    """The golden day-long meal scenario: four plates, one digest."""
    root.mkdir(parents=True, exist_ok=True)
    config = {
        "name": "golden-nutrition",
        "seed": 7,
        "start_date": "2024-05-01",
        "device": {
            "device_id": "fp-kitchen-1",
            "person_id": "alex",
            "allergens": ["Lemon"],
            "confidence_threshold": 0.5,
            "pir": {"r9_ohms": 1e6, "c7_farads": 1e-8, "no_motion_timeout_ticks": 600},
            "nutrition": {"enabled": True, "digest_time": "20:00"},
        },
    }
    (root / "scenario.json").write_text(json.dumps(config, indent=2) + "\n")
    write_frames(
        root / "frames.jsonl",
        [_frame_record(fid, counts) for fid, counts in PLATE_BOXES.items()],
    )
    timeline = [
        {"at_tick": 0, "kind": "Frame", "frame_id": "plate-0"},
        {"at_tick": 600, "kind": "Frame", "frame_id": "plate-1"},
        {"at_tick": 4200, "kind": "Frame", "frame_id": "plate-2"},
        {"at_tick": 7800, "kind": "Frame", "frame_id": "plate-3"},
        {"at_tick": 10900, "kind": "AdvanceHours", "hours": 18},
    ]
    with (root / "timeline.jsonl").open("w", encoding="utf-8") as fh:
        for entry in timeline:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    return root


def write_allergen_scenario(root: Path, *, ack: bool, timeout: int = 600) -> Path:
    """Allergen episode ending either in an ack or a departure timeout."""
    root.mkdir(parents=True, exist_ok=True)
    config = {
        "name": "allergen-ack" if ack else "allergen-departure",
        "seed": 3,
        "start_date": "2024-05-02",
        "device": {
            "device_id": "fp-1",
            "person_id": "sam",
            "allergens": ["Lemon", "Grapefruit"],
            "confidence_threshold": 0.5,
            "pir": {"r9_ohms": 1e6, "c7_farads": 1e-8, "no_motion_timeout_ticks": timeout},
            "nutrition": {"enabled": False},
        },
    }
    (root / "scenario.json").write_text(json.dumps(config, indent=2) + "\n")
    write_frames(
        root / "frames.jsonl",
        [_frame_record("lemon-frame", {"Lemon": 1, "Apple": 1})],
    )
    timeline: list[dict] = [
        {"at_tick": 10, "kind": "Motion"},
        {"at_tick": 12, "kind": "Frame", "frame_id": "lemon-frame"},
    ]
    if ack:
        timeline.append(
            {
                "at_tick": 40,
                "kind": "CaregiverAck",
                "alert_id": "fp-1-alert-1",
                "caregiver_id": "dana",
            }
        )
    timeline.append({"at_tick": 2000, "kind": "AdvanceHours", "hours": 1})
    with (root / "timeline.jsonl").open("w", encoding="utf-8") as fh:
        for entry in timeline:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    return root


@pytest.fixture
def nutrition_scenario(tmp_path: Path) -> Path:
    return write_nutrition_scenario(tmp_path / "golden")


@pytest.fixture
def ack_scenario(tmp_path: Path) -> Path:
    return write_allergen_scenario(tmp_path / "ack", ack=True)


@pytest.fixture
def departure_scenario(tmp_path: Path) -> Path:
    return write_allergen_scenario(tmp_path / "departure", ack=False)
