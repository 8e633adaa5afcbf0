"""Daily fruit-consumption tracking.

The tracker snapshots the fruit on view at day start (the baseline),
re-observes once per hour, and counts any per-class drop as eaten. Rises
and drops both re-baseline, so a restocked bowl never creates phantom
consumption. After 24 hourly observations the day is complete; a fixed
evening digest reports what was eaten and the nutrients those classes
provide, and the next morning's reset starts a fresh ledger.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import FruitClass, FruitInventory, FruitPalError, nutrient_lookup

HOURS_PER_DAY = 24

#: Digest body used when nothing was eaten all day.
EMPTY_DIGEST_TEXT = "no fruit consumed"


class DayComplete(FruitPalError):
    """Raised when an hourly observation arrives after the 24th."""


@dataclass(frozen=True)
class TrackerState:
    """Tracker position within one day."""

    baseline: FruitInventory
    eaten: FruitInventory
    ticks_elapsed: int
    day_start: int

    def __post_init__(self):
        if not 0 <= self.ticks_elapsed <= HOURS_PER_DAY:
            raise ValueError(f"ticks_elapsed out of range: {self.ticks_elapsed}")


def start_day(inventory: FruitInventory, now: int) -> TrackerState:
    """Open a fresh day: the given inventory becomes the baseline.

    Restarting mid-day goes through here too, discarding the prior ledger.
    """
    return TrackerState(
        baseline=inventory,
        eaten=FruitInventory(),
        ticks_elapsed=0,
        day_start=now,
    )


def hourly_tick(
    state: TrackerState, observed: FruitInventory
) -> tuple[TrackerState, FruitInventory]:
    """Fold one hourly observation into the ledger.

    Per class, a drop from the baseline counts as eaten; the observation
    then becomes the new baseline wholesale, so a class that rose simply
    raises the bar for the next hour. Returns (new state, this hour's
    delta). The 25th tick of a day raises DayComplete.
    """
    if state.ticks_elapsed >= HOURS_PER_DAY:
        raise DayComplete(
            f"day already has {HOURS_PER_DAY} observations; reset before ticking"
        )
    drops = {
        fruit: state.baseline[fruit] - observed[fruit]
        for fruit in state.baseline.classes()
        if observed[fruit] < state.baseline[fruit]
    }
    delta = FruitInventory(drops)
    eaten = dict(state.eaten.items())
    for fruit, count in delta.items():
        eaten[fruit] = eaten.get(fruit, 0) + count
    new_state = TrackerState(
        baseline=observed,
        eaten=FruitInventory(eaten),
        ticks_elapsed=state.ticks_elapsed + 1,
        day_start=state.day_start,
    )
    return new_state, delta


def daily_reset(state: TrackerState, observed: FruitInventory, now: int) -> TrackerState:
    """Morning reset: identical to starting a new day on the observation."""
    return start_day(observed, now)


def median_inventory(
    first: FruitInventory, second: FruitInventory, third: FruitInventory
) -> FruitInventory:
    """Per-class median of three observations.

    Optional flicker smoothing for noisy detectors; the tracker itself
    never calls it, callers opt in per observation.
    """
    classes = set(first.classes()) | set(second.classes()) | set(third.classes())
    counts = {}
    for fruit in classes:
        a, b, c = sorted((first[fruit], second[fruit], third[fruit]))
        if b:
            counts[fruit] = b
    return FruitInventory(counts)


@dataclass(frozen=True)
class DigestMessage:
    """The once-daily consumption summary."""

    date: str
    eaten: FruitInventory
    nutrients: tuple[str, ...]
    text: str


def digest_nutrients(eaten: FruitInventory) -> tuple[str, ...]:
    """Nutrient strings for the eaten classes, deduplicated.

    Classes are visited in vocabulary order; each contributes its group's
    nutrient line, kept at first occurrence.
    """
    seen: list[str] = []
    for fruit, _count in eaten.items():
        _, nutrients = nutrient_lookup(fruit)
        for line in nutrients:
            if line not in seen:
                seen.append(line)
    return tuple(seen)


def compose_digest(state: TrackerState, date: str) -> DigestMessage:
    """Render the day's digest from the current ledger."""
    nutrients = digest_nutrients(state.eaten)
    lines = [f"Daily fruit digest for {date}:"]
    if state.eaten:
        for fruit, count in state.eaten.items():
            lines.append(f"  {fruit.label} x{count}")
        lines.append("Nutrients provided: " + "; ".join(nutrients))
    else:
        lines.append(f"  {EMPTY_DIGEST_TEXT}")
    return DigestMessage(
        date=date,
        eaten=state.eaten,
        nutrients=nutrients,
        text="\n".join(lines),
    )
