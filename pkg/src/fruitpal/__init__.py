"""Fruit recognition study toolkit: simulator, hub, dataset and metric tools."""

from .core import (
    ALL_CLASSES,
    AllergyProfile,
    BoundingBox,
    ConfigError,
    Detection,
    FruitClass,
    FruitGroup,
    FruitInventory,
    FruitPalError,
    GroundTruth,
    nutrient_lookup,
)
from .detection import (
    DetectorBackend,
    FrameNotFound,
    FrameRef,
    ScriptedDetector,
    detect,
    non_max_suppression,
    to_inventory,
)
from .evaluation import (
    EvalReport,
    MatchResult,
    PRCurve,
    average_precision,
    confusion_matrix,
    evaluate_dataset,
    iou,
    map_50_95,
    map_at,
    match_detections,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_CLASSES",
    "AllergyProfile",
    "BoundingBox",
    "ConfigError",
    "Detection",
    "DetectorBackend",
    "EvalReport",
    "FrameNotFound",
    "FrameRef",
    "FruitClass",
    "FruitGroup",
    "FruitInventory",
    "FruitPalError",
    "GroundTruth",
    "MatchResult",
    "PRCurve",
    "ScriptedDetector",
    "average_precision",
    "confusion_matrix",
    "detect",
    "evaluate_dataset",
    "iou",
    "map_50_95",
    "map_at",
    "match_detections",
    "non_max_suppression",
    "nutrient_lookup",
    "to_inventory",
    "__version__",
]
