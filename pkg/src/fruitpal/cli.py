"""Command-line interface.

    fruitpal sim run <scenario-dir> [--out DIR]
    fruitpal eval --preds FILE --truths FILE [--iou 0.5] [--conf 0.25] [--out DIR]
    fruitpal dataset health <manifest> [--json]
    fruitpal dataset split <manifest> --out FILE [--ratios 0.7,0.2,0.1] [--seed N]
    fruitpal dataset augment <manifest> --out-dir DIR [--recipe set1] [--seed N]
                             [--images-dir DIR]
    fruitpal dataset convert <manifest-in> --out FILE
    fruitpal hub serve [--host H] [--port P] [--log FILE] [--token T]
    fruitpal hub agent --hub URL --device-id D --person-id P --allergen CLASS
                       [--alerts N] [--wait SECS] [--token T] [--digest]

Exit codes: 0 success, 1 invariant violation during a run, 2 input error.
The FRUITPAL_LOG_DIR environment variable supplies the default output
directory wherever no explicit path is given.

Prediction files for `eval` are line-delimited JSON:
    {"image_id": "img-1", "detections": [{"class": "Apple", "x_min": 0.1,
     "y_min": 0.1, "x_max": 0.5, "y_max": 0.5, "confidence": 0.9}]}
(`frame_id` is accepted as a synonym for `image_id`.) Truth files use the
dataset manifest format.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
import urllib.error
import urllib.request
from pathlib import Path

import numpy as np
from PIL import Image

from .core import BoundingBox, Detection, FruitClass, FruitPalError, GroundTruth
from .dataset.augment import (
    RECIPES,
    AugmentationPlan,
    augment_image,
    derive_seed,
    mosaic,
    mosaic_groups,
)
from .dataset.health import health_check, render_health_text
from .dataset.health import report_to_dict as health_to_dict
from .dataset.manifest import (
    AnnotatedImage,
    convert_center_manifest,
    image_to_record,
    load_manifest,
    save_manifest,
)
from .dataset.splits import split_dataset
from .evaluation import confusion_to_csv, evaluate_dataset, report_to_dict
from .simulator import InvariantViolation, run_scenario


def _default_out(fallback: str) -> Path:
    env = os.environ.get("FRUITPAL_LOG_DIR")
    return Path(env) if env else Path(fallback)


# --- eval helpers -------------------------------------------------------------


def load_predictions(path: str | Path) -> dict[str, list[Detection]]:
    """Read a predictions file into per-image detection lists."""
    preds: dict[str, list[Detection]] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                raw = json.loads(text)
                image_id = str(raw.get("image_id") or raw["frame_id"])
                detections = [
                    Detection(
                        fruit=FruitClass.parse(str(d["class"])),
                        box=BoundingBox(
                            float(d["x_min"]),
                            float(d["y_min"]),
                            float(d["x_max"]),
                            float(d["y_max"]),
                        ),
                        confidence=float(d["confidence"]),
                    )
                    for d in raw.get("detections", [])
                ]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise FruitPalError(f"{path}:{line_no}: {exc}") from None
            if image_id in preds:
                raise FruitPalError(f"{path}:{line_no}: duplicate image_id {image_id!r}")
            preds[image_id] = detections
    return preds


def _truths_by_image(images: list[AnnotatedImage]) -> dict[str, list[GroundTruth]]:
    return {image.image_id: list(image.truths) for image in images}


def _cmd_eval(args: argparse.Namespace) -> int:
    preds = load_predictions(args.preds)
    truths = _truths_by_image(load_manifest(args.truths))
    report = evaluate_dataset(
        preds, truths, conf_threshold=args.conf, iou_threshold=args.iou
    )
    out = Path(args.out) if args.out else _default_out("eval_out")
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(
        json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    (out / "confusion.csv").write_text(confusion_to_csv(report.confusion), encoding="utf-8")
    print(
        f"precision {report.precision:.4f} recall {report.recall:.4f} "
        f"mAP50 {report.map50:.4f} mAP50-95 {report.map50_95:.4f}"
    )
    print(f"wrote {out / 'report.json'} and {out / 'confusion.csv'}")
    return 0


# --- sim -----------------------------------------------------------------------


def _cmd_sim_run(args: argparse.Namespace) -> int:
    result = run_scenario(args.scenario_dir, out_dir=args.out)
    summary = result.summary
    print(f"scenario {result.scenario.name!r} finished at tick {summary['final_tick']}")
    print(
        f"alerts raised {summary['alerts_raised']}, "
        f"acknowledged {summary['alerts_acknowledged']}, "
        f"departures {summary['alerts_cleared_by_departure']}, "
        f"digests {summary['digests']}, hourly ticks {summary['hourly_ticks']}"
    )
    from .simulator import output_dir_for

    print(f"artifacts in {output_dir_for(args.scenario_dir, args.out)}")
    return 0


# --- dataset --------------------------------------------------------------------


def _cmd_dataset_health(args: argparse.Namespace) -> int:
    report = health_check(load_manifest(args.manifest))
    if args.json:
        print(json.dumps(health_to_dict(report), indent=2, sort_keys=True))
    else:
        print(render_health_text(report), end="")
    return 0


def _cmd_dataset_split(args: argparse.Namespace) -> int:
    try:
        parts = [float(p) for p in args.ratios.split(",")]
    except ValueError:
        raise FruitPalError(f"ratios must be three numbers: {args.ratios!r}") from None
    if len(parts) != 3:
        raise FruitPalError(f"ratios must be three numbers: {args.ratios!r}")
    images = load_manifest(args.manifest)
    assigned = split_dataset(images, (parts[0], parts[1], parts[2]), seed=args.seed)
    save_manifest(assigned, args.out)
    counts = {"Training": 0, "Validation": 0, "Testing": 0}
    for image in assigned:
        counts[image.split.value] += 1
    print(
        f"assigned {len(assigned)} images: "
        f"train {counts['Training']}, val {counts['Validation']}, test {counts['Testing']}"
    )
    print(f"wrote {args.out}")
    return 0


def _synth_pixels(image: AnnotatedImage, plan_seed: int) -> np.ndarray:
    """Deterministic placeholder pixels for manifests without image files."""
    rng = np.random.Generator(
        np.random.PCG64(derive_seed(plan_seed, f"pixels:{image.image_id}"))
    )
    height = min(image.height, 96)
    width = min(image.width, 96)
    return rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)


def _load_pixels(
    image: AnnotatedImage, images_dir: Path | None, plan_seed: int
) -> np.ndarray:
    if images_dir is not None:
        for suffix in (".png", ".jpg", ".jpeg"):
            candidate = images_dir / f"{image.image_id}{suffix}"
            if candidate.exists():
                with Image.open(candidate) as img:
                    return np.asarray(img.convert("RGB"), dtype=np.uint8)
        raise FruitPalError(f"no image file for {image.image_id!r} in {images_dir}")
    return _synth_pixels(image, plan_seed)


def _cmd_dataset_augment(args: argparse.Namespace) -> int:
    if args.recipe not in RECIPES:
        raise FruitPalError(
            f"unknown recipe {args.recipe!r}; choose from {sorted(RECIPES)}"
        )
    plan = AugmentationPlan(recipe=RECIPES[args.recipe], seed=args.seed)
    images = load_manifest(args.manifest)
    images_dir = Path(args.images_dir) if args.images_dir else None
    out_dir = Path(args.out_dir) if args.out_dir else _default_out("augment_out")
    pictures_dir = out_dir / "images"
    pictures_dir.mkdir(parents=True, exist_ok=True)

    out_images: list[AnnotatedImage] = []
    draw_lines: list[str] = []
    pixels_by_id: dict[str, np.ndarray] = {}
    for image in images:
        pixels = _load_pixels(image, images_dir, plan.seed)
        pixels_by_id[image.image_id] = pixels
        seed = derive_seed(plan.seed, image.image_id)
        for variant in augment_image(pixels, image.truths, plan, seed):
            out_id = f"{image.image_id}__{variant.tag}"
            Image.fromarray(variant.pixels).save(pictures_dir / f"{out_id}.png")
            out_images.append(
                AnnotatedImage(
                    image_id=out_id,
                    width=variant.pixels.shape[1],
                    height=variant.pixels.shape[0],
                    truths=variant.truths,
                    split=image.split,
                )
            )
            draw_lines.append(
                json.dumps(
                    {
                        "image_id": image.image_id,
                        "variant": variant.tag,
                        "seed": seed,
                        "grayscale": variant.draw.grayscale,
                        "saturation": variant.draw.saturation,
                        "brightness": variant.draw.brightness,
                        "exposure": variant.draw.exposure,
                        "blur_sigma": variant.draw.blur_sigma,
                        "noise_fraction": variant.draw.noise_fraction,
                    },
                    sort_keys=True,
                )
            )
    if plan.recipe.mosaic:
        by_id = {image.image_id: image for image in images}
        for index, group in enumerate(mosaic_groups(sorted(by_id), plan.seed)):
            inputs = [(pixels_by_id[i], by_id[i].truths) for i in group]
            composite, truths = mosaic(inputs)
            out_id = f"mosaic-{index:04d}"
            Image.fromarray(composite).save(pictures_dir / f"{out_id}.png")
            out_images.append(
                AnnotatedImage(
                    image_id=out_id,
                    width=composite.shape[1],
                    height=composite.shape[0],
                    truths=truths,
                )
            )
            draw_lines.append(
                json.dumps(
                    {"image_id": out_id, "variant": "mosaic", "members": list(group)},
                    sort_keys=True,
                )
            )
    save_manifest(out_images, out_dir / "manifest.jsonl")
    (out_dir / "draws.jsonl").write_text(
        "".join(line + "\n" for line in draw_lines), encoding="utf-8"
    )
    print(
        f"augmented {len(images)} images -> {len(out_images)} outputs "
        f"({plan.recipe.name}, seed {plan.seed})"
    )
    print(f"wrote {out_dir / 'manifest.jsonl'} and {out_dir / 'draws.jsonl'}")
    return 0


def _cmd_dataset_convert(args: argparse.Namespace) -> int:
    count = convert_center_manifest(args.manifest, args.out)
    print(f"converted {count} images -> {args.out}")
    return 0


# --- hub -------------------------------------------------------------------------


def _cmd_hub_serve(args: argparse.Namespace) -> int:
    from .hub import CloudHub
    from .hub_http import serve

    log_path = args.log
    if log_path is None and os.environ.get("FRUITPAL_LOG_DIR"):
        directory = Path(os.environ["FRUITPAL_LOG_DIR"])
        directory.mkdir(parents=True, exist_ok=True)
        log_path = directory / "hub.jsonl"
    hub = (
        CloudHub.open(log_path, start_date=args.start_date)
        if log_path is not None
        else CloudHub(start_date=args.start_date)
    )
    where = log_path if log_path is not None else "memory only"
    print(f"hub listening on http://{args.host}:{args.port} (log: {where})")
    try:
        serve(hub, host=args.host, port=args.port, client_token=args.token)
    finally:
        hub.close()
    return 0


def _http_json(
    method: str,
    url: str,
    body: dict | None = None,
    token: str | None = None,
    timeout: float = 10.0,
) -> tuple[int, dict]:
    data = json.dumps(body).encode() if body is not None else None
    request = urllib.request.Request(url, data=data, method=method)
    request.add_header("content-type", "application/json")
    if token:
        request.add_header("x-client-token", token)
    try:
        with urllib.request.urlopen(request, timeout=timeout) as response:
            return response.status, json.loads(response.read() or b"{}")
    except urllib.error.HTTPError as exc:
        return exc.code, json.loads(exc.read() or b"{}")


def _cmd_hub_agent(args: argparse.Namespace) -> int:
    """Scripted device: raise alerts, wait for acks, publish clears.

    Exists so a console client can be exercised against a live hub
    without real hardware.
    """
    base = args.hub.rstrip("/")
    token = args.token
    device = args.device_id
    counter = 0

    def publish(kind: str, payload: dict) -> dict:
        nonlocal counter
        counter += 1
        status, body = _http_json(
            "POST",
            f"{base}/messages",
            {
                "msg_id": f"{device}-msg-{counter}",
                "kind": kind,
                "device_id": device,
                "payload": payload,
                "published_at": int(time.time()),
            },
            token=token,
        )
        if status not in (200, 201):
            raise FruitPalError(f"publish failed ({status}): {body}")
        return body

    publish("DeviceStatus", {"status": "online"})
    if args.digest:
        publish(
            "TextMessage",
            {
                "person_id": args.person_id,
                "date": time.strftime("%Y-%m-%d"),
                "body": "Daily fruit digest: Apple x1\nNutrients provided: "
                "vitamin C and Manganese",
                "nutrients": ["vitamin C and Manganese"],
                "eaten": {"Apple": 1},
                "transport": "gsm",
            },
        )
    fruit = FruitClass.parse(args.allergen)
    for index in range(1, args.alerts + 1):
        alert_id = f"{device}-alert-{index}"
        publish(
            "AlertRaised",
            {
                "alert_id": alert_id,
                "person_id": args.person_id,
                "fruit": fruit.label,
                "confidence": args.confidence,
                "message": "Allergen detected – danger present",
                "raised_at": int(time.time()),
            },
        )
        print(f"raised {alert_id}")
        cursor = 0
        resolution = "ClearedByDeparture"
        deadline = time.monotonic() + args.wait
        while time.monotonic() < deadline:
            status, body = _http_json(
                "GET",
                f"{base}/messages?after={cursor}&kinds=CaregiverAck",
                token=token,
            )
            if status != 200:
                raise FruitPalError(f"poll failed ({status}): {body}")
            cursor = body["cursor"]
            acked = any(
                m["payload"].get("alert_id") == alert_id for m in body["messages"]
            )
            if acked:
                resolution = "Acknowledged"
                break
            time.sleep(args.interval)
        publish(
            "AlertCleared",
            {
                "alert_id": alert_id,
                "resolution": resolution,
                "resolved_at": int(time.time()),
            },
        )
        print(f"cleared {alert_id} ({resolution})")
    return 0


# --- Parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fruitpal", description="Fruit-allergen watch toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("sim", help="scenario simulator")
    sim_sub = sim.add_subparsers(dest="sim_command", required=True)
    sim_run = sim_sub.add_parser("run", help="run a scenario directory")
    sim_run.add_argument("scenario_dir")
    sim_run.add_argument("--out", default=None, help="artifact directory")
    sim_run.set_defaults(func=_cmd_sim_run)

    ev = sub.add_parser("eval", help="detection evaluation")
    ev.add_argument("--preds", required=True)
    ev.add_argument("--truths", required=True)
    ev.add_argument("--iou", type=float, default=0.5)
    ev.add_argument("--conf", type=float, default=0.25)
    ev.add_argument("--out", default=None, help="report directory")
    ev.set_defaults(func=_cmd_eval)

    ds = sub.add_parser("dataset", help="manifest tooling")
    ds_sub = ds.add_subparsers(dest="dataset_command", required=True)

    ds_health = ds_sub.add_parser("health", help="per-class statistics")
    ds_health.add_argument("manifest")
    ds_health.add_argument("--json", action="store_true")
    ds_health.set_defaults(func=_cmd_dataset_health)

    ds_split = ds_sub.add_parser("split", help="assign train/val/test")
    ds_split.add_argument("manifest")
    ds_split.add_argument("--out", required=True)
    ds_split.add_argument("--ratios", default="0.7,0.2,0.1")
    ds_split.add_argument("--seed", type=int, default=0)
    ds_split.set_defaults(func=_cmd_dataset_split)

    ds_augment = ds_sub.add_parser("augment", help="run an augmentation recipe")
    ds_augment.add_argument("manifest")
    ds_augment.add_argument("--recipe", default="set1")
    ds_augment.add_argument("--seed", type=int, default=0)
    ds_augment.add_argument("--out-dir", default=None)
    ds_augment.add_argument(
        "--images-dir",
        default=None,
        help="directory of image files named by image_id; "
        "omitted, deterministic placeholder pixels are synthesized",
    )
    ds_augment.set_defaults(func=_cmd_dataset_augment)

    ds_convert = ds_sub.add_parser(
        "convert", help="center-form pixel manifest to corner-form normalized"
    )
    ds_convert.add_argument("manifest")
    ds_convert.add_argument("--out", required=True)
    ds_convert.set_defaults(func=_cmd_dataset_convert)

    hub = sub.add_parser("hub", help="message hub")
    hub_sub = hub.add_subparsers(dest="hub_command", required=True)

    hub_serve = hub_sub.add_parser("serve", help="run the HTTP hub")
    hub_serve.add_argument("--host", default="127.0.0.1")
    hub_serve.add_argument("--port", type=int, default=8787)
    hub_serve.add_argument("--log", default=None, help="durable log file")
    hub_serve.add_argument("--token", default=None, help="require x-client-token")
    hub_serve.add_argument("--start-date", default="2024-01-01")
    hub_serve.set_defaults(func=_cmd_hub_serve)

    hub_agent = hub_sub.add_parser("agent", help="scripted device emulator")
    hub_agent.add_argument("--hub", required=True, help="hub base URL")
    hub_agent.add_argument("--device-id", default="fp-device-1")
    hub_agent.add_argument("--person-id", default="person-1")
    hub_agent.add_argument("--allergen", default="Mango")
    hub_agent.add_argument("--confidence", type=float, default=0.9)
    hub_agent.add_argument("--alerts", type=int, default=1)
    hub_agent.add_argument("--wait", type=float, default=30.0)
    hub_agent.add_argument("--interval", type=float, default=0.1)
    hub_agent.add_argument("--digest", action="store_true")
    hub_agent.add_argument("--token", default=None)
    hub_agent.set_defaults(func=_cmd_hub_agent)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 1
    except FruitPalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
