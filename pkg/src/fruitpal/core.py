"""Shared vocabulary types: fruit classes, boxes, detections, inventories.

Everything here is an immutable value type, safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Mapping


class FruitPalError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(FruitPalError):
    """Invalid configuration value."""


class FruitClass(Enum):
    """The closed 15-class fruit vocabulary.

    Enum values are the canonical external spellings (note the space in
    "Common fig"); parsing any other label fails.
    """

    APPLE = "Apple"
    BANANA = "Banana"
    CANTALOUPE = "Cantaloupe"
    COMMON_FIG = "Common fig"
    GRAPE = "Grape"
    GRAPEFRUIT = "Grapefruit"
    LEMON = "Lemon"
    MANGO = "Mango"
    ORANGE = "Orange"
    PEACH = "Peach"
    PEAR = "Pear"
    PINEAPPLE = "Pineapple"
    POMEGRANATE = "Pomegranate"
    STRAWBERRY = "Strawberry"
    WATERMELON = "Watermelon"

    @property
    def label(self) -> str:
        return self.value

    @classmethod
    def parse(cls, label: str) -> "FruitClass":
        try:
            return cls(label)
        except ValueError:
            raise ValueError(f"unknown fruit class: {label!r}") from None


#: Declaration order of the vocabulary; used wherever a canonical class
#: ordering is needed (inventories, confusion-matrix axes, digests).
ALL_CLASSES: tuple[FruitClass, ...] = tuple(FruitClass)

_CLASS_ORDER: dict[FruitClass, int] = {c: i for i, c in enumerate(ALL_CLASSES)}


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in normalized image coordinates, corner form.

    Invariant: 0 <= x_min < x_max <= 1 and 0 <= y_min < y_max <= 1, so the
    box always has strictly positive area.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.x_min < self.x_max <= 1.0):
            raise ValueError(f"invalid x extent: [{self.x_min}, {self.x_max}]")
        if not (0.0 <= self.y_min < self.y_max <= 1.0):
            raise ValueError(f"invalid y extent: [{self.y_min}, {self.y_max}]")

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


@dataclass(frozen=True)
class Detection:
    """One detector output: class, box, and confidence in [0, 1]."""

    fruit: FruitClass
    box: BoundingBox
    confidence: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence out of range: {self.confidence}")


@dataclass(frozen=True)
class GroundTruth:
    """One annotated box."""

    fruit: FruitClass
    box: BoundingBox


class FruitInventory:
    """Per-class fruit counts. Absent classes count as zero.

    Canonicalized on construction: zero counts are dropped, so two
    inventories are equal iff they assign the same count to every class.
    """

    __slots__ = ("_counts",)

    def __init__(self, counts: Mapping[FruitClass, int] | Iterable[tuple[FruitClass, int]] = ()):
        items = counts.items() if isinstance(counts, Mapping) else counts
        acc: dict[FruitClass, int] = {}
        for fruit, n in items:
            if not isinstance(fruit, FruitClass):
                raise TypeError(f"not a FruitClass: {fruit!r}")
            if n < 0:
                raise ValueError(f"negative count for {fruit.label}: {n}")
            if n:
                acc[fruit] = acc.get(fruit, 0) + n
        self._counts: dict[FruitClass, int] = {
            c: acc[c] for c in ALL_CLASSES if c in acc
        }

    def count(self, fruit: FruitClass) -> int:
        return self._counts.get(fruit, 0)

    __getitem__ = count

    def items(self) -> Iterator[tuple[FruitClass, int]]:
        """Present classes with their counts, in canonical class order."""
        return iter(self._counts.items())

    def classes(self) -> tuple[FruitClass, ...]:
        return tuple(self._counts)

    def total(self) -> int:
        return sum(self._counts.values())

    def __bool__(self) -> bool:
        return bool(self._counts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FruitInventory):
            return NotImplemented
        return self._counts == other._counts

    def __hash__(self) -> int:
        return hash(tuple(self._counts.items()))

    def __repr__(self) -> str:
        inner = ", ".join(f"{c.label}: {n}" for c, n in self._counts.items())
        return f"FruitInventory({{{inner}}})"

    def to_labels(self) -> dict[str, int]:
        """Serializable form keyed by canonical class labels."""
        return {c.label: n for c, n in self._counts.items()}

    @classmethod
    def from_labels(cls, labels: Mapping[str, int]) -> "FruitInventory":
        return cls({FruitClass.parse(k): v for k, v in labels.items()})


@dataclass(frozen=True)
class AllergyProfile:
    """One monitored person: which fruits are dangerous and above what confidence."""

    person_id: str
    allergens: frozenset[FruitClass]
    confidence_threshold: float

    def __post_init__(self) -> None:
        if not self.person_id:
            raise ValueError("person_id must be non-empty")
        if not self.allergens:
            raise ValueError("allergens must be non-empty")
        object.__setattr__(self, "allergens", frozenset(self.allergens))
        if not (0.0 <= self.confidence_threshold <= 1.0):
            raise ValueError(f"confidence_threshold out of range: {self.confidence_threshold}")


class FruitGroup(Enum):
    """The six nutritional fruit groups."""

    CITRUS = "Citrus"
    TROPICAL = "Tropical"
    POME = "Pome"
    STONE = "Stone"
    MELONS = "Melons"
    BERRIES = "Berries"


@dataclass(frozen=True)
class NutrientGroup:
    """One nutritional group: its nutrient summary and member classes."""

    group: FruitGroup
    nutrients: tuple[str, ...]
    members: frozenset[FruitClass]


# The published nutritional table. Nutrient strings are kept verbatim,
# including their inconsistent capitalization.
NUTRIENT_GROUPS: tuple[NutrientGroup, ...] = (
    NutrientGroup(
        FruitGroup.CITRUS,
        ("Vitamin C and Potassium",),
        frozenset({FruitClass.GRAPEFRUIT, FruitClass.LEMON, FruitClass.ORANGE}),
    ),
    NutrientGroup(
        FruitGroup.TROPICAL,
        ("Vitamin B6 and C",),
        frozenset({FruitClass.BANANA, FruitClass.MANGO, FruitClass.PINEAPPLE}),
    ),
    NutrientGroup(
        FruitGroup.POME,
        ("vitamin C and Manganese",),
        frozenset({FruitClass.APPLE, FruitClass.COMMON_FIG, FruitClass.POMEGRANATE}),
    ),
    NutrientGroup(
        FruitGroup.STONE,
        ("vitamins A, C, and E",),
        frozenset({FruitClass.PEACH, FruitClass.PEAR}),
    ),
    NutrientGroup(
        FruitGroup.MELONS,
        ("Vitamins A and C",),
        frozenset({FruitClass.CANTALOUPE, FruitClass.WATERMELON}),
    ),
    NutrientGroup(
        FruitGroup.BERRIES,
        ("Vitamin K and Folate",),
        frozenset({FruitClass.GRAPE, FruitClass.STRAWBERRY}),
    ),
)

_GROUP_BY_FRUIT: dict[FruitClass, NutrientGroup] = {
    fruit: group for group in NUTRIENT_GROUPS for fruit in group.members
}

assert len(_GROUP_BY_FRUIT) == len(ALL_CLASSES), "groups must partition the vocabulary"


def nutrient_lookup(fruit: FruitClass) -> tuple[FruitGroup, list[str]]:
    """Return the unique group containing `fruit` and its nutrient list.

    Total over the closed enum; never fails for a FruitClass.
    """
    group = _GROUP_BY_FRUIT[fruit]
    return group.group, list(group.nutrients)
