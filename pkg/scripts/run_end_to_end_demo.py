#!/usr/bin/env python3
"""One-command tour: simulate, inspect the hub log, evaluate a detector.

Usage: python scripts/run_end_to_end_demo.py [--root demo]

Builds the demo scenarios, runs the nutrition day and the caregiver-ack
episode, replays the durable hub log that the runs produced, and then
scores a deliberately imperfect detector against a small ground-truth
manifest.
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))
from make_demo_scenarios import allergen, nutrition_day  # noqa: E402

from fruitpal.core import BoundingBox, Detection, FruitClass, GroundTruth  # noqa: E402
from fruitpal.evaluation import evaluate_dataset  # noqa: E402
from fruitpal.hub import CloudHub  # noqa: E402
from fruitpal.simulator import run_scenario  # noqa: E402


def show_run(root: Path) -> None:
    result = run_scenario(root)
    print(f"\n== {result.scenario.name} ==")
    for key, value in sorted(result.summary.items()):
        print(f"  {key}: {value}")
    for digest in result.log.of_type("DigestPublished"):
        print("  digest body:")
        for line in digest["body"].splitlines():
            print(f"    {line}")
    for alert in result.log.of_type("AlertRaised"):
        print(f"  alert {alert['alert_id']}: {alert['message']}")


def show_hub_replay(log_path: Path) -> None:
    hub = CloudHub.open(log_path)
    try:
        entries = hub.log_entries()
        kinds = [msg.kind.value for _seq, msg in entries]
        print(f"\n== hub log replay ({log_path}) ==")
        print(f"  {len(entries)} durable records: {kinds}")
    finally:
        hub.close()


def show_eval() -> None:
    jitter = 0.02
    truths = {
        "shelf-0": [
            GroundTruth(FruitClass.APPLE, BoundingBox(0.10, 0.10, 0.30, 0.30)),
            GroundTruth(FruitClass.BANANA, BoundingBox(0.40, 0.10, 0.60, 0.30)),
        ],
        "shelf-1": [
            GroundTruth(FruitClass.APPLE, BoundingBox(0.20, 0.50, 0.45, 0.80)),
        ],
    }
    preds = {
        "shelf-0": [
            Detection(FruitClass.APPLE, BoundingBox(0.10, 0.10, 0.30, 0.30), 0.95),
            # Shifted enough to lose some of the IoU sweep.
            Detection(
                FruitClass.BANANA,
                BoundingBox(0.40 + jitter, 0.10 + jitter, 0.60 + jitter, 0.30 + jitter),
                0.80,
            ),
            # A hallucinated strawberry: counted as a false positive.
            Detection(FruitClass.STRAWBERRY, BoundingBox(0.7, 0.7, 0.9, 0.9), 0.60),
        ],
        "shelf-1": [],
    }
    report = evaluate_dataset(preds, truths)
    print("\n== detector scorecard (2 images, 3 truths) ==")
    print(
        f"  precision {report.precision:.4f} recall {report.recall:.4f} "
        f"mAP50 {report.map50:.4f} mAP50-95 {report.map50_95:.4f}"
    )
    for fruit, ap in sorted(report.per_class_ap.items(), key=lambda kv: kv[0].label):
        print(f"  AP50 {fruit.label}: {ap:.4f}")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default="demo")
    args = parser.parse_args()
    scenarios = Path(args.root) / "scenarios"
    nutrition_day(scenarios / "nutrition-day")
    allergen(scenarios / "allergen-ack", ack=True)

    show_run(scenarios / "nutrition-day")
    show_run(scenarios / "allergen-ack")
    show_hub_replay(scenarios / "nutrition-day" / "out" / "hub.jsonl")
    show_eval()
    print("\nartifacts under", json.dumps(str(scenarios)))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
