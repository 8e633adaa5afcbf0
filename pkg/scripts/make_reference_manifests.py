#!/usr/bin/env python3
"""Write the two reference manifests and print their health reports.

Usage: python scripts/make_reference_manifests.py [--root demo/manifests]

`annotations.jsonl` carries the per-class image and box counts of the
annotated corpus (16,762 boxes over 3,862 distinct images, plus 170
null examples); `splits.jsonl` carries the train/val/test box counts.
Both are synthetic fixtures shaped to those totals, useful as inputs
for `fruitpal dataset health|split`.
"""

import argparse
from pathlib import Path

from fruitpal.dataset.health import health_check, render_health_text
from fruitpal.dataset.manifest import save_manifest
from fruitpal.dataset.reference import build_health_manifest, build_split_manifest


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default="demo/manifests")
    args = parser.parse_args()
    root = Path(args.root)
    root.mkdir(parents=True, exist_ok=True)

    annotations = build_health_manifest()
    save_manifest(annotations, root / "annotations.jsonl")
    print(f"wrote {root / 'annotations.jsonl'} ({len(annotations)} images)")
    print(render_health_text(health_check(annotations)), end="")

    splits = build_split_manifest()
    save_manifest(splits, root / "splits.jsonl")
    print(f"\nwrote {root / 'splits.jsonl'} ({len(splits)} images)")
    print(render_health_text(health_check(splits)), end="")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
