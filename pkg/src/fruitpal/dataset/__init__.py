"""Dataset tooling: manifests, health statistics, splits, augmentation."""

from .augment import (
    RECIPES,
    SET1,
    SET2,
    SET3,
    AugmentationPlan,
    AugmentationRecipe,
    AugmentedVariant,
    ParameterDraw,
    augment_image,
    derive_seed,
    mosaic,
    mosaic_groups,
    sample_draw,
)
from .health import HealthReport, health_check, render_health_text
from .manifest import (
    AnnotatedImage,
    ManifestError,
    Split,
    center_to_corner,
    convert_center_manifest,
    load_manifest,
    parse_manifest_line,
    save_manifest,
)
from .reference import (
    HEALTH_TABLE,
    SPLIT_TABLE,
    build_health_manifest,
    build_split_manifest,
)
from .splits import DEFAULT_RATIOS, largest_remainder, split_dataset

__all__ = [
    "HEALTH_TABLE",
    "RECIPES",
    "SET1",
    "SET2",
    "SET3",
    "SPLIT_TABLE",
    "AnnotatedImage",
    "AugmentationPlan",
    "AugmentationRecipe",
    "AugmentedVariant",
    "DEFAULT_RATIOS",
    "HealthReport",
    "ManifestError",
    "ParameterDraw",
    "Split",
    "augment_image",
    "build_health_manifest",
    "build_split_manifest",
    "center_to_corner",
    "convert_center_manifest",
    "derive_seed",
    "health_check",
    "largest_remainder",
    "load_manifest",
    "mosaic",
    "mosaic_groups",
    "parse_manifest_line",
    "render_health_text",
    "sample_draw",
    "save_manifest",
    "split_dataset",
]
