"""Scenario-driven discrete-event simulator.

A scenario is a directory of three files:

* `scenario.json`: name, seed, start date, and the device configuration
  (identity, allergy profile, motion-sensor wiring, nutrition settings).
* `frames.jsonl`: scripted detector output per frame id.
* `timeline.jsonl`: the ordered external stimuli, one per line:
  `{"at_tick": 0, "kind": "Motion"}`,
  `{"at_tick": 5, "kind": "Frame", "frame_id": "plate-0"}`,
  `{"at_tick": 9, "kind": "CaregiverAck", "alert_id": "...",
    "caregiver_id": "carol"}`,
  `{"at_tick": 20, "kind": "AdvanceHours", "hours": 3}`,
  `{"at_tick": 30, "kind": "Restart"}`.

Time is a virtual integer clock, one tick per simulated second; nothing
waits on the wall clock. Whenever the clock moves, the crossed triggers
fire in time order, and at an equal tick in a fixed priority: the hourly
nutrition observation first, then the scheduled digest, then the
no-motion departure check. Every record the run produces goes into an
EventLog whose serialized form is bytewise reproducible.

The most recent Frame is "the scene": hourly nutrition observations read
it, and the tracker starts on the first frame shown. Frames reach the
allergen state machine only while the device sees someone (any non-idle
mode). Caregiver acknowledgments flow through the hub and back to the
device subscription, never directly between machines.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

from . import allergen
from .allergen import (
    ALERT_MESSAGE,
    AckReceived,
    Alert,
    AlertState,
    CaptureFrame,
    EndPlatformState,
    FrameCaptured,
    Mode,
    Motion,
    PirConfig,
    PublishAlert,
    StaleAck,
    StopAlarm,
    TimeAdvanced,
)
from .core import (
    AllergyProfile,
    ConfigError,
    FruitClass,
    FruitInventory,
    FruitPalError,
)
from .detection import FixtureError, FrameRef, ScriptedDetector, detect, to_inventory
from .hub import CloudHub, HubMessage, MessageKind
from .nutrition import (
    TrackerState,
    compose_digest,
    daily_reset,
    hourly_tick,
    median_inventory,
    start_day,
)

TICKS_PER_HOUR = 3_600
HOURS_PER_DAY = 24


class ScenarioError(FruitPalError):
    """Scenario input failed validation; carries file and line context."""

    def __init__(self, message: str, file: str | None = None, line: int | None = None):
        self.file = file
        self.line = line
        where = ""
        if file is not None:
            where = f"{file}:{line}: " if line is not None else f"{file}: "
        super().__init__(where + message)


class InvariantViolation(FruitPalError):
    """A module invariant broke mid-run; the log up to the break is kept."""


# --- Scenario model ----------------------------------------------------------


@dataclass(frozen=True)
class NutritionConfig:
    enabled: bool = False
    digest_time: str = "20:00"
    smoothing: bool = False


@dataclass(frozen=True)
class DeviceConfig:
    device_id: str
    profile: AllergyProfile
    pir: PirConfig
    nutrition: NutritionConfig


@dataclass(frozen=True)
class MotionEntry:
    at_tick: int


@dataclass(frozen=True)
class FrameEntry:
    at_tick: int
    frame_id: str


@dataclass(frozen=True)
class AckEntry:
    at_tick: int
    alert_id: str
    caregiver_id: str


@dataclass(frozen=True)
class AdvanceEntry:
    at_tick: int
    hours: int


@dataclass(frozen=True)
class RestartEntry:
    at_tick: int


TimelineEntry = Union[MotionEntry, FrameEntry, AckEntry, AdvanceEntry, RestartEntry]


@dataclass(frozen=True)
class Scenario:
    name: str
    seed: int
    start_date: str
    device: DeviceConfig
    frames: ScriptedDetector
    timeline: tuple[TimelineEntry, ...]


def _require(raw: dict, key: str, file: str) -> object:
    if key not in raw:
        raise ScenarioError(f"missing {key!r}", file=file)
    return raw[key]


def load_scenario(path: str | Path) -> Scenario:
    """Load and validate a scenario directory."""
    directory = Path(path)
    if not directory.is_dir():
        raise ScenarioError(f"not a directory: {directory}")
    config_path = directory / "scenario.json"
    frames_path = directory / "frames.jsonl"
    timeline_path = directory / "timeline.jsonl"
    for required in (config_path, frames_path, timeline_path):
        if not required.exists():
            raise ScenarioError("file missing", file=str(required))

    try:
        raw = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            f"invalid JSON: {exc.msg}", file=str(config_path), line=exc.lineno
        ) from None
    cfg_file = str(config_path)
    if not isinstance(raw, dict):
        raise ScenarioError("top level must be an object", file=cfg_file)
    name = str(_require(raw, "name", cfg_file))
    seed = _require(raw, "seed", cfg_file)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ScenarioError("seed must be an integer", file=cfg_file)
    start_date = str(raw.get("start_date", "2024-01-01"))
    device_raw = _require(raw, "device", cfg_file)
    if not isinstance(device_raw, dict):
        raise ScenarioError("'device' must be an object", file=cfg_file)
    try:
        profile = AllergyProfile(
            person_id=str(_require(device_raw, "person_id", cfg_file)),
            allergens=frozenset(
                FruitClass.parse(str(a))
                for a in _require(device_raw, "allergens", cfg_file)
            ),
            confidence_threshold=float(
                device_raw.get("confidence_threshold", 0.5)
            ),
        )
        pir_raw = _require(device_raw, "pir", cfg_file)
        if not isinstance(pir_raw, dict):
            raise ScenarioError("'pir' must be an object", file=cfg_file)
        pir = PirConfig(
            r9_ohms=float(_require(pir_raw, "r9_ohms", cfg_file)),
            c7_farads=float(_require(pir_raw, "c7_farads", cfg_file)),
            no_motion_timeout=int(_require(pir_raw, "no_motion_timeout_ticks", cfg_file)),
        )
        nutrition_raw = device_raw.get("nutrition", {})
        if not isinstance(nutrition_raw, dict):
            raise ScenarioError("'nutrition' must be an object", file=cfg_file)
        nutrition = NutritionConfig(
            enabled=bool(nutrition_raw.get("enabled", False)),
            digest_time=str(nutrition_raw.get("digest_time", "20:00")),
            smoothing=bool(nutrition_raw.get("smoothing", False)),
        )
        device = DeviceConfig(
            device_id=str(_require(device_raw, "device_id", cfg_file)),
            profile=profile,
            pir=pir,
            nutrition=nutrition,
        )
    except ScenarioError:
        raise
    except (ConfigError, ValueError, TypeError) as exc:
        raise ScenarioError(str(exc), file=cfg_file) from None

    try:
        frames = ScriptedDetector.from_file(frames_path)
    except FixtureError as exc:
        raise ScenarioError(str(exc), file=str(frames_path)) from None

    timeline = _load_timeline(timeline_path, frames)
    return Scenario(
        name=name,
        seed=seed,
        start_date=start_date,
        device=device,
        frames=frames,
        timeline=timeline,
    )


def _load_timeline(path: Path, frames: ScriptedDetector) -> tuple[TimelineEntry, ...]:
    entries: list[TimelineEntry] = []
    file = str(path)
    last_tick = -1
    horizon = 0  # first tick allowed after any AdvanceHours
    with open(path, encoding="utf-8") as fh:
        for line_no, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                raw = json.loads(text)
            except json.JSONDecodeError as exc:
                raise ScenarioError(
                    f"invalid JSON: {exc.msg}", file=file, line=line_no
                ) from None
            if not isinstance(raw, dict):
                raise ScenarioError("entry must be an object", file=file, line=line_no)
            if "at_tick" not in raw or "kind" not in raw:
                raise ScenarioError(
                    "entry needs 'at_tick' and 'kind'", file=file, line=line_no
                )
            at_tick = raw["at_tick"]
            if not isinstance(at_tick, int) or isinstance(at_tick, bool) or at_tick < 0:
                raise ScenarioError(
                    f"at_tick must be a non-negative integer: {at_tick!r}",
                    file=file,
                    line=line_no,
                )
            if at_tick <= last_tick:
                raise ScenarioError(
                    f"at_tick must be strictly increasing ({at_tick} after {last_tick})",
                    file=file,
                    line=line_no,
                )
            if at_tick < horizon:
                raise ScenarioError(
                    f"at_tick {at_tick} falls inside the preceding AdvanceHours "
                    f"(clock already at {horizon})",
                    file=file,
                    line=line_no,
                )
            kind = raw["kind"]
            if kind == "Motion":
                entries.append(MotionEntry(at_tick=at_tick))
            elif kind == "Frame":
                frame_id = raw.get("frame_id")
                if not isinstance(frame_id, str) or not frame_id:
                    raise ScenarioError("Frame needs 'frame_id'", file=file, line=line_no)
                if frame_id not in frames:
                    raise ScenarioError(
                        f"frame_id {frame_id!r} not in frames.jsonl",
                        file=file,
                        line=line_no,
                    )
                entries.append(FrameEntry(at_tick=at_tick, frame_id=frame_id))
            elif kind == "CaregiverAck":
                alert_id = raw.get("alert_id")
                if not isinstance(alert_id, str) or not alert_id:
                    raise ScenarioError(
                        "CaregiverAck needs 'alert_id'", file=file, line=line_no
                    )
                entries.append(
                    AckEntry(
                        at_tick=at_tick,
                        alert_id=alert_id,
                        caregiver_id=str(raw.get("caregiver_id", "caregiver-1")),
                    )
                )
            elif kind == "AdvanceHours":
                hours = raw.get("hours")
                if not isinstance(hours, int) or isinstance(hours, bool) or hours < 1:
                    raise ScenarioError(
                        f"AdvanceHours needs integer 'hours' >= 1: {hours!r}",
                        file=file,
                        line=line_no,
                    )
                entries.append(AdvanceEntry(at_tick=at_tick, hours=hours))
                horizon = at_tick + hours * TICKS_PER_HOUR
            elif kind == "Restart":
                entries.append(RestartEntry(at_tick=at_tick))
            else:
                raise ScenarioError(f"unknown kind {kind!r}", file=file, line=line_no)
            last_tick = at_tick
    return tuple(entries)


# --- Event log ---------------------------------------------------------------


@dataclass
class EventLog:
    """Append-only run record; serialization is bytewise reproducible."""

    records: list[dict] = field(default_factory=list)

    def append(self, tick: int, type: str, **fields: object) -> None:
        self.records.append({"tick": tick, "type": type, **fields})

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(record, sort_keys=True) + "\n" for record in self.records
        )

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    def of_type(self, type: str) -> list[dict]:
        return [r for r in self.records if r["type"] == type]


@dataclass
class SimResult:
    scenario: Scenario
    log: EventLog
    summary: dict


# --- Runner -------------------------------------------------------------------


class _Runner:
    def __init__(self, scenario: Scenario, hub: CloudHub):
        self.scenario = scenario
        self.hub = hub
        self.device = scenario.device
        self.log = EventLog()
        self.now = 0
        self.machine = EndPlatformState(device_id=self.device.device_id)
        self.tracker: TrackerState | None = None
        self.scene: FrameRef | None = None
        self.msg_counter = 0
        self.eaten_total_floor = 0  # monotonicity watermark for the ledger
        self.recent_scenes: list[FruitInventory] = []  # last 3, for smoothing
        self.inbox = hub.subscribe(
            f"{self.device.device_id}/inbox", kinds={MessageKind.CAREGIVER_ACK}
        )

    # --- Hub helpers ---------------------------------------------------

    def _next_msg_id(self) -> str:
        self.msg_counter += 1
        return f"{self.device.device_id}-msg-{self.msg_counter}"

    def _publish(self, kind: MessageKind, payload: dict) -> str:
        msg = HubMessage(
            msg_id=self._next_msg_id(),
            kind=kind,
            device_id=self.device.device_id,
            payload=payload,
            published_at=self.now,
        )
        self.hub.publish(msg)
        return msg.msg_id

    def _observe_scene(self) -> FruitInventory:
        if self.scene is None:
            return FruitInventory()
        detections = detect(
            self.scenario.frames, self.scene, self.device.profile.confidence_threshold
        )
        return to_inventory(detections)

    # --- Command handling -------------------------------------------------

    def _handle_commands(self, commands: list[allergen.Command]) -> None:
        for command in commands:
            if isinstance(command, CaptureFrame):
                self.log.append(self.now, "CaptureFrame")
            elif isinstance(command, PublishAlert):
                alert = command.alert
                msg_id = self._publish(
                    MessageKind.ALERT_RAISED,
                    {
                        "alert_id": alert.alert_id,
                        "person_id": alert.person_id,
                        "fruit": alert.hit.fruit.label,
                        "confidence": alert.hit.confidence,
                        "message": command.message,
                        "raised_at": alert.raised_at,
                        "frame_id": alert.hit.frame.frame_id,
                    },
                )
                self.log.append(
                    self.now,
                    "AlertRaised",
                    alert_id=alert.alert_id,
                    fruit=alert.hit.fruit.label,
                    confidence=alert.hit.confidence,
                    message=command.message,
                    msg_id=msg_id,
                )
            elif isinstance(command, StopAlarm):
                resolved = self.machine.active_alert
                resolved_at = (
                    resolved.resolved_at
                    if resolved is not None and resolved.resolved_at is not None
                    else self.now
                )
                msg_id = self._publish(
                    MessageKind.ALERT_CLEARED,
                    {
                        "alert_id": command.alert_id,
                        "resolution": command.reason.value,
                        "resolved_at": resolved_at,
                    },
                )
                self.log.append(
                    self.now,
                    "AlertCleared",
                    alert_id=command.alert_id,
                    resolution=command.reason.value,
                    msg_id=msg_id,
                )
            elif isinstance(command, StaleAck):
                self.log.append(
                    self.now,
                    "StaleAck",
                    alert_id=command.alert_id,
                    caregiver_id=command.caregiver_id,
                )

    def _step_machine(self, event: allergen.DeviceEvent) -> None:
        try:
            self.machine, commands = allergen.step(
                self.machine,
                event,
                self.device.profile,
                self.scenario.frames,
                self.device.pir,
            )
        except ValueError as exc:
            raise InvariantViolation(f"device state broke: {exc}") from None
        self._handle_commands(commands)

    def _drain_inbox(self) -> None:
        for seq, msg in self.inbox.poll():
            self.inbox.commit(seq)
            if msg.device_id != self.device.device_id:
                continue
            payload = msg.payload
            self.log.append(
                self.now,
                "CaregiverAckDelivered",
                alert_id=str(payload["alert_id"]),
                caregiver_id=str(payload["caregiver_id"]),
            )
            self._step_machine(
                AckReceived(
                    alert_id=str(payload["alert_id"]),
                    caregiver_id=str(payload["caregiver_id"]),
                    at=self.now,
                )
            )

    # --- Nutrition -----------------------------------------------------------

    def _tracker_for_digest(self) -> TrackerState:
        if self.tracker is not None:
            return self.tracker
        return start_day(FruitInventory(), self.now)

    def _compose_digest_payload(self, date: str) -> dict:
        digest = compose_digest(self._tracker_for_digest(), date)
        return {
            "person_id": self.device.profile.person_id,
            "date": date,
            "body": digest.text,
            "nutrients": list(digest.nutrients),
            "eaten": digest.eaten.to_labels(),
            "transport": "gsm",
        }

    def _smoothed_scene(self) -> FruitInventory:
        if self.device.nutrition.smoothing and len(self.recent_scenes) == 3:
            return median_inventory(*self.recent_scenes)
        return self._observe_scene()

    def _hourly_observation(self) -> None:
        assert self.tracker is not None
        observed = self._smoothed_scene()
        if self.tracker.ticks_elapsed >= HOURS_PER_DAY:
            self.tracker = daily_reset(self.tracker, observed, self.now)
            self.eaten_total_floor = 0
            self.log.append(
                self.now, "DailyReset", baseline=observed.to_labels()
            )
            return
        self.tracker, delta = hourly_tick(self.tracker, observed)
        total = self.tracker.eaten.total()
        if total < self.eaten_total_floor:
            raise InvariantViolation(
                f"eaten ledger shrank within a day: {total} < {self.eaten_total_floor}"
            )
        self.eaten_total_floor = total
        self.log.append(
            self.now,
            "HourlyTick",
            hour=self.tracker.ticks_elapsed,
            observed=observed.to_labels(),
            delta=delta.to_labels(),
            eaten=self.tracker.eaten.to_labels(),
        )

    # --- Clock ---------------------------------------------------------------

    def _advance_clock(self, target: int) -> None:
        """Move time forward, firing crossed triggers in (tick, priority) order."""
        while True:
            candidates: list[tuple[int, int]] = []
            if self.tracker is not None:
                boundary = (self.now // TICKS_PER_HOUR + 1) * TICKS_PER_HOUR
                if boundary <= target:
                    candidates.append((boundary, 0))
            pending = self.hub.next_fire()
            if pending is not None and self.now <= pending <= target:
                candidates.append((pending, 1))
            if self.machine.mode is not Mode.IDLE:
                departure = self.machine.last_motion_at + self.device.pir.no_motion_timeout
                if self.now <= departure <= target:
                    candidates.append((departure, 2))
            if not candidates:
                break
            tick, priority = min(candidates)
            self.now = tick
            if priority == 0:
                self._hourly_observation()
            elif priority == 1:
                self._advance_hub(tick)
            else:
                self._advance_hub(tick)
                self._step_machine(TimeAdvanced(now=tick))
            self._drain_inbox()
        self._advance_hub(target)
        self.now = target

    def _advance_hub(self, tick: int) -> None:
        """Move the hub clock, logging any digests it fires on the way."""
        for receipt in self.hub.advance_to(tick):
            published = self.hub.get_by_msg_id(receipt.msg_id)
            assert published is not None
            self.log.append(
                published.published_at,
                "DigestPublished",
                msg_id=receipt.msg_id,
                date=str(published.payload["date"]),
                eaten=published.payload["eaten"],
                nutrients=published.payload["nutrients"],
                body=published.payload["body"],
            )

    # --- Timeline entries ------------------------------------------------------

    def _handle_entry(self, entry: TimelineEntry) -> None:
        if isinstance(entry, MotionEntry):
            self.log.append(self.now, "Motion")
            self._step_machine(Motion(at=self.now))
        elif isinstance(entry, FrameEntry):
            frame = FrameRef(frame_id=entry.frame_id, timestamp=self.now)
            self.scene = frame
            self.log.append(self.now, "FrameShown", frame_id=entry.frame_id)
            if self.device.nutrition.enabled:
                self.recent_scenes = (self.recent_scenes + [self._observe_scene()])[-3:]
            if self.device.nutrition.enabled and self.tracker is None:
                baseline = self._observe_scene()
                self.tracker = start_day(baseline, self.now)
                self.eaten_total_floor = 0
                self.log.append(
                    self.now, "NutritionStart", baseline=baseline.to_labels()
                )
            if self.machine.mode is not Mode.IDLE:
                self._step_machine(FrameCaptured(frame=frame, at=self.now))
        elif isinstance(entry, AckEntry):
            self.log.append(
                self.now,
                "AckRequested",
                alert_id=entry.alert_id,
                caregiver_id=entry.caregiver_id,
            )
            try:
                self.hub.acknowledge(entry.alert_id, entry.caregiver_id)
            except FruitPalError as exc:
                self.log.append(
                    self.now, "AckRejected", alert_id=entry.alert_id, reason=str(exc)
                )
        elif isinstance(entry, AdvanceEntry):
            self.log.append(self.now, "AdvanceHours", hours=entry.hours)
            self._advance_clock(self.now + entry.hours * TICKS_PER_HOUR)
        elif isinstance(entry, RestartEntry):
            observed = self._observe_scene()
            if self.device.nutrition.enabled:
                self.tracker = start_day(observed, self.now)
                self.eaten_total_floor = 0
            self.log.append(self.now, "Restart", baseline=observed.to_labels())
        else:
            raise TypeError(f"unknown timeline entry: {entry!r}")
        self._drain_inbox()

    def run(self) -> SimResult:
        device = self.device
        self.log.append(
            0,
            "ScenarioStart",
            name=self.scenario.name,
            seed=self.scenario.seed,
            start_date=self.scenario.start_date,
            device_id=device.device_id,
            person_id=device.profile.person_id,
            allergens=sorted(f.label for f in device.profile.allergens),
            confidence_threshold=device.profile.confidence_threshold,
            pir_time_constant_s=allergen.pir_time_constant(
                device.pir.r9_ohms, device.pir.c7_farads
            ),
            nutrition_enabled=device.nutrition.enabled,
        )
        self._publish(MessageKind.DEVICE_STATUS, {"status": "online"})
        if device.nutrition.enabled:
            self.hub.schedule_digest(
                device.device_id,
                device.nutrition.digest_time,
                self._compose_digest_payload,
            )
        for entry in self.scenario.timeline:
            self._advance_clock(entry.at_tick)
            self._handle_entry(entry)
        summary = self._summarize()
        self.log.append(self.now, "ScenarioEnd", **summary)
        return SimResult(scenario=self.scenario, log=self.log, summary=summary)

    def _summarize(self) -> dict:
        cleared = self.log.of_type("AlertCleared")
        return {
            "alerts_raised": len(self.log.of_type("AlertRaised")),
            "alerts_acknowledged": sum(
                1 for r in cleared if r["resolution"] == AlertState.ACKNOWLEDGED.value
            ),
            "alerts_cleared_by_departure": sum(
                1
                for r in cleared
                if r["resolution"] == AlertState.CLEARED_BY_DEPARTURE.value
            ),
            "digests": len(self.log.of_type("DigestPublished")),
            "hourly_ticks": len(self.log.of_type("HourlyTick")),
            "stale_acks": len(self.log.of_type("StaleAck")),
            "final_tick": self.now,
            "final_mode": self.machine.mode.value,
        }


def output_dir_for(scenario_dir: str | Path, override: str | Path | None = None) -> Path:
    """Where a run writes its artifacts.

    Precedence: explicit override, then FRUITPAL_LOG_DIR, then `out/`
    inside the scenario directory.
    """
    if override is not None:
        return Path(override)
    env = os.environ.get("FRUITPAL_LOG_DIR")
    if env:
        return Path(env)
    return Path(scenario_dir) / "out"


def run_scenario(
    path: str | Path,
    out_dir: str | Path | None = None,
    write_outputs: bool = True,
) -> SimResult:
    """Execute one scenario directory and (optionally) write its artifacts.

    Artifacts: `events.jsonl` (the EventLog), `hub.jsonl` (the hub's
    durable log), `summary.json`.
    """
    scenario = load_scenario(path)
    destination = output_dir_for(path, out_dir)
    hub_log_path = None
    if write_outputs:
        destination.mkdir(parents=True, exist_ok=True)
        hub_log_path = destination / "hub.jsonl"
        # A fresh run replaces prior artifacts; append would break replays.
        if hub_log_path.exists():
            hub_log_path.unlink()
    hub = CloudHub(log_path=hub_log_path, start_date=scenario.start_date)
    try:
        result = _Runner(scenario, hub).run()
    finally:
        hub.close()
    if write_outputs:
        result.log.write(destination / "events.jsonl")
        (destination / "summary.json").write_text(
            json.dumps(result.summary, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    return result
