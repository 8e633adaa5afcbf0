#!/usr/bin/env python3
"""Write three runnable demo scenario directories.

Usage: python scripts/make_demo_scenarios.py [--root demo/scenarios]

Creates `nutrition-day/` (a full day of meals ending in a digest),
`allergen-ack/` (an alert resolved by a caregiver), and
`allergen-departure/` (an alert resolved by the no-motion timeout).
Run any of them with `fruitpal sim run <dir>`.
"""

import argparse
import json
from pathlib import Path

PIR = {"r9_ohms": 1e6, "c7_farads": 1e-8, "no_motion_timeout_ticks": 600}

PLATES = {
    "plate-0": {"Apple": 2, "Banana": 1, "Strawberry": 3},
    "plate-1": {"Apple": 1, "Banana": 1, "Strawberry": 3},
    "plate-2": {"Apple": 1, "Banana": 1, "Strawberry": 3, "Mango": 2},
    "plate-3": {"Apple": 1, "Banana": 1, "Strawberry": 2, "Mango": 2},
}


def frame_record(frame_id: str, counts: dict[str, int]) -> dict:
    detections = []
    k = 0
    for label, n in counts.items():
        for _ in range(n):
            detections.append(
                {
                    "class": label,
                    "x_min": k * 0.06,
                    "y_min": 0.1,
                    "x_max": k * 0.06 + 0.05,
                    "y_max": 0.2,
                    "confidence": 0.9,
                }
            )
            k += 1
    return {"frame_id": frame_id, "detections": detections}


def write_scenario(root: Path, config: dict, frames: list[dict], timeline: list[dict]) -> None:
    root.mkdir(parents=True, exist_ok=True)
    (root / "scenario.json").write_text(json.dumps(config, indent=2) + "\n")
    with (root / "frames.jsonl").open("w", encoding="utf-8") as fh:
        for record in frames:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    with (root / "timeline.jsonl").open("w", encoding="utf-8") as fh:
        for entry in timeline:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
    print(f"wrote {root}")


def nutrition_day(root: Path) -> None:
    config = {
        "name": "nutrition-day",
        "seed": 7,
        "start_date": "2024-05-01",
        "device": {
            "device_id": "fp-kitchen-1",
            "person_id": "alex",
            "allergens": ["Lemon"],
            "confidence_threshold": 0.5,
            "pir": PIR,
            "nutrition": {"enabled": True, "digest_time": "20:00"},
        },
    }
    frames = [frame_record(fid, counts) for fid, counts in PLATES.items()]
    timeline = [
        {"at_tick": 0, "kind": "Frame", "frame_id": "plate-0"},
        {"at_tick": 600, "kind": "Frame", "frame_id": "plate-1"},
        {"at_tick": 4200, "kind": "Frame", "frame_id": "plate-2"},
        {"at_tick": 7800, "kind": "Frame", "frame_id": "plate-3"},
        {"at_tick": 10900, "kind": "AdvanceHours", "hours": 18},
    ]
    write_scenario(root, config, frames, timeline)


def allergen(root: Path, *, ack: bool) -> None:
    config = {
        "name": "allergen-ack" if ack else "allergen-departure",
        "seed": 3,
        "start_date": "2024-05-02",
        "device": {
            "device_id": "fp-1",
            "person_id": "sam",
            "allergens": ["Lemon", "Grapefruit"],
            "confidence_threshold": 0.5,
            "pir": PIR,
            "nutrition": {"enabled": False},
        },
    }
    frames = [frame_record("lemon-frame", {"Lemon": 1, "Apple": 1})]
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
    write_scenario(root, config, frames, timeline)


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default="demo/scenarios")
    args = parser.parse_args()
    root = Path(args.root)
    nutrition_day(root / "nutrition-day")
    allergen(root / "allergen-ack", ack=True)
    allergen(root / "allergen-departure", ack=False)
    print(f"try: fruitpal sim run {root / 'nutrition-day'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
