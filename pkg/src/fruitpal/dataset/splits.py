"""Deterministic train/validation/test assignment."""

from __future__ import annotations

import random
from typing import Sequence

from ..core import ConfigError
from .manifest import AnnotatedImage, Split

DEFAULT_RATIOS = (0.7, 0.2, 0.1)


def largest_remainder(n: int, ratios: Sequence[float]) -> tuple[int, ...]:
    """Apportion n items to ratios, floors first, remainders break ties.

    Remainder ties go to the earlier ratio, so results are order-stable.
    """
    quotas = [n * r for r in ratios]
    floors = [int(q) for q in quotas]
    leftover = n - sum(floors)
    by_remainder = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - floors[i]), i))
    for i in by_remainder[:leftover]:
        floors[i] += 1
    return tuple(floors)


def split_dataset(
    dataset: Sequence[AnnotatedImage],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> list[AnnotatedImage]:
    """Assign every image to exactly one split, deterministically per seed.

    Split sizes are the largest-remainder rounding of the ratios over the
    image count; membership comes from a seeded shuffle. The input order
    is preserved in the returned list.
    """
    if len(ratios) != 3:
        raise ConfigError(f"expected 3 ratios, got {len(ratios)}")
    if any(r <= 0 for r in ratios):
        raise ConfigError(f"ratios must be positive: {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ConfigError(f"ratios must sum to 1, got {sum(ratios)}")
    n_train, n_val, _ = largest_remainder(len(dataset), ratios)
    order = list(range(len(dataset)))
    random.Random(seed).shuffle(order)
    assigned: dict[int, Split] = {}
    for pos, idx in enumerate(order):
        if pos < n_train:
            assigned[idx] = Split.TRAINING
        elif pos < n_train + n_val:
            assigned[idx] = Split.VALIDATION
        else:
            assigned[idx] = Split.TESTING
    return [image.with_split(assigned[i]) for i, image in enumerate(dataset)]
