"""Allergen-watch state machine for the camera end platform.

A device idles until its motion sensor fires, captures frames while
someone is present, and raises a single alert episode when a frame shows
a fruit from the person's allergy list at or above their confidence
threshold. The episode ends when a caregiver acknowledges it or the
person leaves (no motion for the configured timeout). All transitions
are pure: `step` maps (state, event) to (state, commands) and the caller
owns the clock, so replaying an event sequence reproduces the command
log exactly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Union

from .core import AllergyProfile, ConfigError, Detection, FruitClass
from .detection import DetectorBackend, FrameRef, detect

#: Fixed text of the danger notification (en dash, matching the voice line).
ALERT_MESSAGE = "Allergen detected – danger present"


@dataclass(frozen=True)
class PirConfig:
    """Motion-sensor wiring values and the departure timeout."""

    r9_ohms: float
    c7_farads: float
    no_motion_timeout: int  # ticks without motion before "departed"

    def __post_init__(self):
        if self.r9_ohms <= 0:
            raise ConfigError(f"r9_ohms must be positive: {self.r9_ohms}")
        if self.c7_farads <= 0:
            raise ConfigError(f"c7_farads must be positive: {self.c7_farads}")
        if self.no_motion_timeout <= 0:
            raise ConfigError(
                f"no_motion_timeout must be positive: {self.no_motion_timeout}"
            )


def pir_time_constant(r9_ohms: float, c7_farads: float) -> float:
    """Sensor responsiveness time constant, 24 * R9 * C7, in seconds.

    Inputs are SI (ohms, farads): 1 Mohm with 0.01 uF gives 0.24 s.
    """
    if r9_ohms <= 0:
        raise ConfigError(f"r9_ohms must be positive: {r9_ohms}")
    if c7_farads <= 0:
        raise ConfigError(f"c7_farads must be positive: {c7_farads}")
    return 24.0 * (r9_ohms * c7_farads)


class Mode(enum.Enum):
    IDLE = "Idle"
    MOTION_DETECTED = "MotionDetected"
    DETECTING = "Detecting"
    ALERT_ACTIVE = "AlertActive"


class AlertState(enum.Enum):
    ACTIVE = "Active"
    ACKNOWLEDGED = "Acknowledged"
    CLEARED_BY_DEPARTURE = "ClearedByDeparture"


@dataclass(frozen=True)
class AllergenHit:
    """One detection that matched the allergy profile."""

    fruit: FruitClass
    confidence: float
    frame: FrameRef


@dataclass(frozen=True)
class Alert:
    """One alert episode, from raise to acknowledgment or departure."""

    alert_id: str
    person_id: str
    hit: AllergenHit
    state: AlertState
    raised_at: int
    resolved_at: int | None = None

    def __post_init__(self):
        if (self.resolved_at is None) != (self.state is AlertState.ACTIVE):
            raise ValueError("resolved_at must be set exactly when the alert is resolved")
        if self.resolved_at is not None and self.resolved_at < self.raised_at:
            raise ValueError("resolved_at cannot precede raised_at")


@dataclass(frozen=True)
class EndPlatformState:
    """Full device state between events."""

    device_id: str
    mode: Mode = Mode.IDLE
    active_alert: Alert | None = None
    last_motion_at: int = 0
    alerts_raised: int = 0  # lifetime counter, numbers alert ids

    def __post_init__(self):
        has_active = (
            self.active_alert is not None
            and self.active_alert.state is AlertState.ACTIVE
        )
        if (self.mode is Mode.ALERT_ACTIVE) != has_active:
            raise ValueError("AlertActive mode must carry exactly one Active alert")


# --- Events ------------------------------------------------------------------


@dataclass(frozen=True)
class Motion:
    at: int


@dataclass(frozen=True)
class FrameCaptured:
    frame: FrameRef
    at: int


@dataclass(frozen=True)
class AckReceived:
    alert_id: str
    caregiver_id: str
    at: int


@dataclass(frozen=True)
class TimeAdvanced:
    now: int


DeviceEvent = Union[Motion, FrameCaptured, AckReceived, TimeAdvanced]


# --- Commands ----------------------------------------------------------------


@dataclass(frozen=True)
class CaptureFrame:
    at: int


@dataclass(frozen=True)
class PublishAlert:
    alert: Alert
    message: str = ALERT_MESSAGE


@dataclass(frozen=True)
class StopAlarm:
    alert_id: str
    reason: AlertState  # Acknowledged or ClearedByDeparture


@dataclass(frozen=True)
class StaleAck:
    alert_id: str
    caregiver_id: str


Command = Union[CaptureFrame, PublishAlert, StopAlarm, StaleAck]


def evaluate_frame(
    detections: list[Detection], profile: AllergyProfile, frame: FrameRef
) -> AllergenHit | None:
    """Highest-confidence detection matching the profile, if any.

    Confidence ties resolve to the earliest detection in input order.
    """
    best: Detection | None = None
    for det in detections:
        if det.fruit not in profile.allergens:
            continue
        if det.confidence < profile.confidence_threshold:
            continue
        if best is None or det.confidence > best.confidence:
            best = det
    if best is None:
        return None
    return AllergenHit(fruit=best.fruit, confidence=best.confidence, frame=frame)


def _raise_alert(
    state: EndPlatformState, profile: AllergyProfile, hit: AllergenHit, at: int
) -> tuple[EndPlatformState, list[Command]]:
    number = state.alerts_raised + 1
    alert = Alert(
        alert_id=f"{state.device_id}-alert-{number}",
        person_id=profile.person_id,
        hit=hit,
        state=AlertState.ACTIVE,
        raised_at=at,
    )
    new_state = replace(
        state, mode=Mode.ALERT_ACTIVE, active_alert=alert, alerts_raised=number
    )
    return new_state, [PublishAlert(alert=alert)]


def _resolve_alert(
    state: EndPlatformState, outcome: AlertState, at: int
) -> tuple[EndPlatformState, list[Command]]:
    assert state.active_alert is not None
    resolved = replace(state.active_alert, state=outcome, resolved_at=at)
    new_state = replace(state, mode=Mode.IDLE, active_alert=resolved)
    return new_state, [StopAlarm(alert_id=resolved.alert_id, reason=outcome)]


def step(
    state: EndPlatformState,
    event: DeviceEvent,
    profile: AllergyProfile,
    backend: DetectorBackend,
    pir: PirConfig,
) -> tuple[EndPlatformState, list[Command]]:
    """Advance the device one event; returns the new state and commands.

    Transition summary:

    * Motion wakes an idle device (capture requested) and otherwise just
      refreshes the presence clock.
    * Frames are evaluated only while someone is present. An allergen
      frame raises one alert; further allergen frames during an active
      episode refresh it rather than raising another.
    * An acknowledgment for the active alert stops the alarm; any other
      alert id is reported stale and changes nothing.
    * Crossing the no-motion timeout ends the episode as a departure and
      returns the device to idle.
    """
    if isinstance(event, Motion):
        if state.mode is Mode.IDLE:
            new_state = replace(
                state, mode=Mode.MOTION_DETECTED, last_motion_at=event.at
            )
            return new_state, [CaptureFrame(at=event.at)]
        return replace(state, last_motion_at=event.at), []

    if isinstance(event, FrameCaptured):
        if state.mode is Mode.IDLE:
            return state, []
        detections = detect(backend, event.frame, profile.confidence_threshold)
        hit = evaluate_frame(detections, profile, event.frame)
        if hit is None:
            if state.mode is Mode.MOTION_DETECTED:
                return replace(state, mode=Mode.DETECTING), []
            return state, []
        # Any allergen sighting refreshes the presence clock: the hazard
        # is demonstrably still on the table.
        state = replace(state, last_motion_at=event.at)
        if state.mode is Mode.ALERT_ACTIVE:
            # Same episode; never a second active alert.
            return state, []
        return _raise_alert(state, profile, hit, event.at)

    if isinstance(event, AckReceived):
        alert = state.active_alert
        if (
            state.mode is Mode.ALERT_ACTIVE
            and alert is not None
            and alert.alert_id == event.alert_id
        ):
            return _resolve_alert(state, AlertState.ACKNOWLEDGED, event.at)
        return state, [StaleAck(alert_id=event.alert_id, caregiver_id=event.caregiver_id)]

    if isinstance(event, TimeAdvanced):
        return check_departure(state, event.now, pir.no_motion_timeout)

    raise TypeError(f"unknown event: {event!r}")


def check_departure(
    state: EndPlatformState, now: int, timeout: int
) -> tuple[EndPlatformState, list[Command]]:
    """Apply the no-motion timeout at the current tick.

    Resolves an active alert as a departure once `timeout` ticks pass
    without motion; a device merely scanning falls back to idle silently.
    """
    if state.mode is Mode.IDLE:
        return state, []
    if now - state.last_motion_at < timeout:
        return state, []
    if state.mode is Mode.ALERT_ACTIVE:
        return _resolve_alert(state, AlertState.CLEARED_BY_DEPARTURE, now)
    return replace(state, mode=Mode.IDLE), []
