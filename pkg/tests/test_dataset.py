import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fruitpal.core import ALL_CLASSES, BoundingBox, ConfigError, FruitClass, GroundTruth
from fruitpal.dataset import (
    DEFAULT_RATIOS,
    HEALTH_TABLE,
    SPLIT_TABLE,
    AnnotatedImage,
    ManifestError,
    Split,
    build_health_manifest,
    build_split_manifest,
    center_to_corner,
    convert_center_manifest,
    health_check,
    largest_remainder,
    load_manifest,
    parse_manifest_line,
    render_health_text,
    save_manifest,
    split_dataset,
)
from fruitpal.dataset.reference import (
    DISTINCT_ANNOTATED_IMAGES,
    NULL_IMAGE_COUNT,
    TOTAL_ANNOTATIONS,
)


def img(image_id: str, *fruits: FruitClass, split: Split = Split.UNASSIGNED) -> AnnotatedImage:
    truths = tuple(
        GroundTruth(f, BoundingBox(i * 0.05, 0.1, i * 0.05 + 0.04, 0.2))
        for i, f in enumerate(fruits)
    )
    return AnnotatedImage(image_id=image_id, width=640, height=480, truths=truths, split=split)


class TestManifestFormat:
    def test_round_trip(self, tmp_path):
        dataset = [
            img("a", FruitClass.APPLE, FruitClass.APPLE),
            img("b", FruitClass.LEMON, split=Split.TESTING),
            img("c"),
        ]
        path = tmp_path / "manifest.jsonl"
        save_manifest(dataset, path)
        assert load_manifest(path) == dataset

    def test_split_omitted_when_unassigned(self, tmp_path):
        path = tmp_path / "m.jsonl"
        save_manifest([img("a", FruitClass.APPLE)], path)
        record = json.loads(path.read_text().splitlines()[0])
        assert "split" not in record

    def test_duplicate_image_id_rejected(self, tmp_path):
        path = tmp_path / "m.jsonl"
        line = json.dumps({"image_id": "a", "width": 10, "height": 10, "boxes": []})
        path.write_text(line + "\n" + line + "\n")
        with pytest.raises(ManifestError) as exc:
            load_manifest(path)
        assert "line 2" in str(exc.value)

    def test_parse_errors_carry_line_numbers(self):
        with pytest.raises(ManifestError) as exc:
            parse_manifest_line("{bad json", 7)
        assert "line 7" in str(exc.value)

    def test_rejects_unknown_split(self):
        rec = json.dumps(
            {"image_id": "a", "width": 10, "height": 10, "boxes": [], "split": "Dev"}
        )
        with pytest.raises(ManifestError):
            parse_manifest_line(rec, 1)

    def test_rejects_out_of_range_box(self):
        rec = json.dumps(
            {
                "image_id": "a",
                "width": 10,
                "height": 10,
                "boxes": [
                    {"class": "Apple", "x_min": 0.5, "y_min": 0, "x_max": 0.4, "y_max": 1}
                ],
            }
        )
        with pytest.raises(ManifestError):
            parse_manifest_line(rec, 1)


class TestCenterToCorner:
    def test_basic_conversion(self):
        box = center_to_corner(320, 240, 320, 240, 640, 480)
        assert box == BoundingBox(0.25, 0.25, 0.75, 0.75)

    def test_clamps_to_image_bounds(self):
        box = center_to_corner(10, 10, 40, 40, 100, 100)
        assert box.x_min == 0.0
        assert box.y_min == 0.0
        assert box.x_max == pytest.approx(0.3)

    def test_rejects_nonpositive_size(self):
        with pytest.raises(ValueError):
            center_to_corner(10, 10, 0, 5, 100, 100)

    def test_rejects_box_fully_outside_image(self):
        with pytest.raises(ValueError):
            center_to_corner(-50, 50, 20, 20, 100, 100)

    def test_converter_file_round_trip(self, tmp_path):
        src = tmp_path / "center.jsonl"
        rec = {
            "image_id": "a",
            "width": 100,
            "height": 100,
            "boxes": [
                {"class": "Apple", "x_center": 50, "y_center": 50, "box_width": 20, "box_height": 20}
            ],
        }
        src.write_text(json.dumps(rec) + "\n")
        out = tmp_path / "corner.jsonl"
        assert convert_center_manifest(src, out) == 1
        (loaded,) = load_manifest(out)
        (truth,) = loaded.truths
        assert truth.box == BoundingBox(0.4, 0.4, 0.6, 0.6)


class TestHealthCheck:
    def test_empty_dataset(self):
        report = health_check([])
        assert report.total_images == 0
        assert report.avg_objects_per_image == 0.0

    def test_multi_class_image_counts_once_per_class(self):
        report = health_check([img("a", FruitClass.APPLE, FruitClass.ORANGE)])
        assert report.per_class[FruitClass.APPLE] == (1, 1)
        assert report.per_class[FruitClass.ORANGE] == (1, 1)
        assert report.annotated_images == 1
        assert report.total_annotations == 2

    def test_background_images_excluded_from_average(self):
        dataset = [img("a", FruitClass.APPLE, FruitClass.APPLE), img("bg")]
        report = health_check(dataset)
        assert report.total_images == 2
        assert report.annotated_images == 1
        assert report.avg_objects_per_image == 2.0

    def test_permutation_invariant(self):
        dataset = [
            img("a", FruitClass.APPLE),
            img("b", FruitClass.LEMON, FruitClass.LEMON),
            img("c"),
        ]
        fwd = health_check(dataset)
        rev = health_check(dataset[::-1])
        assert fwd == rev

    def test_split_boxes_tallied(self):
        dataset = [
            img("a", FruitClass.APPLE, split=Split.TRAINING),
            img("b", FruitClass.APPLE, split=Split.TESTING),
            img("c", FruitClass.APPLE),
        ]
        report = health_check(dataset)
        assert report.per_split_boxes[FruitClass.APPLE] == (1, 0, 1)

    def test_render_mentions_every_class(self):
        text = render_health_text(health_check([img("a", FruitClass.APPLE)]))
        for c in ALL_CLASSES:
            assert c.label in text


class TestLargestRemainder:
    def test_exact_ratios(self):
        assert largest_remainder(10, (0.7, 0.2, 0.1)) == (7, 2, 1)

    def test_sums_to_n(self):
        for n in range(0, 200):
            assert sum(largest_remainder(n, DEFAULT_RATIOS)) == n

    def test_remainder_tie_prefers_earlier_ratio(self):
        # 1 * 0.5 leaves two equal remainders of 0.5; the first wins.
        assert largest_remainder(1, (0.5, 0.5)) == (1, 0)

    @given(st.integers(0, 10_000))
    def test_never_negative(self, n):
        parts = largest_remainder(n, DEFAULT_RATIOS)
        assert all(p >= 0 for p in parts)
        assert sum(parts) == n


class TestSplitDataset:
    def _dataset(self, n: int) -> list[AnnotatedImage]:
        return [img(f"i{k}", FruitClass.APPLE) for k in range(n)]

    def test_every_image_assigned(self):
        out = split_dataset(self._dataset(100), seed=1)
        assert all(im.split is not Split.UNASSIGNED for im in out)

    def test_sizes_follow_largest_remainder(self):
        out = split_dataset(self._dataset(101), seed=5)
        sizes = {s: sum(1 for im in out if im.split is s) for s in Split}
        want = largest_remainder(101, DEFAULT_RATIOS)
        assert (
            sizes[Split.TRAINING],
            sizes[Split.VALIDATION],
            sizes[Split.TESTING],
        ) == want

    def test_deterministic_per_seed(self):
        a = split_dataset(self._dataset(50), seed=3)
        b = split_dataset(self._dataset(50), seed=3)
        c = split_dataset(self._dataset(50), seed=4)
        assert a == b
        assert [im.split for im in a] != [im.split for im in c]

    def test_input_order_preserved(self):
        dataset = self._dataset(30)
        out = split_dataset(dataset, seed=2)
        assert [im.image_id for im in out] == [im.image_id for im in dataset]

    def test_rejects_bad_ratios(self):
        with pytest.raises(ConfigError):
            split_dataset(self._dataset(10), ratios=(0.5, 0.5, 0.5))
        with pytest.raises(ConfigError):
            split_dataset(self._dataset(10), ratios=(1.0, 0.0, 0.0))


@pytest.fixture(scope="module")
def health_report():
    return health_check(build_health_manifest())


@pytest.fixture(scope="module")
def split_report():
    return health_check(build_split_manifest())


class TestReferenceFixtures:
    def test_per_class_counts(self, health_report):
        for fruit, images, annotations in HEALTH_TABLE:
            assert health_report.per_class[fruit] == (images, annotations), fruit.label

    def test_totals(self, health_report):
        assert health_report.total_annotations == TOTAL_ANNOTATIONS
        assert health_report.annotated_images == DISTINCT_ANNOTATED_IMAGES
        assert health_report.total_images == DISTINCT_ANNOTATED_IMAGES + NULL_IMAGE_COUNT

    def test_average_objects_per_image(self, health_report):
        assert health_report.avg_objects_per_image == pytest.approx(4.34, abs=0.01)

    def test_unique_image_ids(self):
        manifest = build_health_manifest()
        assert len({im.image_id for im in manifest}) == len(manifest)

    def test_split_boxes_match_table(self, split_report):
        for fruit, train, val, test in SPLIT_TABLE:
            assert split_report.per_split_boxes[fruit] == (train, val, test), fruit.label

    def test_manifests_survive_serialization(self, tmp_path):
        manifest = build_health_manifest()
        path = tmp_path / "health.jsonl"
        save_manifest(manifest, path)
        assert health_check(load_manifest(path)) == health_check(manifest)
