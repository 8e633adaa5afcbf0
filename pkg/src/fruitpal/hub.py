"""Cloud message hub: durable publish, subscriptions, acks, digest schedule.

Semantics, chosen for verifiability:

* Every publish is appended (and flushed) to the log before any
  subscriber can see it, so a delivered message always exists in the log.
* Delivery is at-least-once. Subscribers pull from their last committed
  cursor; polling again before committing re-delivers, and reconnecting
  under the same client id resumes from the committed cursor. Receivers
  deduplicate by msg_id.
* A global sequence number orders the log, which makes per-publisher
  FIFO a corollary: two messages from one device can never swap.
* Publishing an msg_id the log already holds is a no-op returning the
  original sequence; acknowledgment builds its msg_id deterministically
  from (alert id, caregiver id), which makes repeated acks idempotent
  end to end.

The hub runs embedded in the simulator and behind the HTTP service with
this one implementation; only the transport wrapper differs.
"""

from __future__ import annotations

import datetime as _dt
import enum
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

from .core import ConfigError, FruitClass, FruitPalError

TICKS_PER_DAY = 86_400  # one tick is one simulated second


class PublishError(FruitPalError):
    """Message rejected or could not be made durable."""


class AlertNotFound(FruitPalError):
    """Acknowledgment referenced an alert id absent from the log."""


class SubscriptionClosed(FruitPalError):
    """Poll or commit on a subscription that was replaced or closed."""


class MessageKind(enum.Enum):
    ALERT_RAISED = "AlertRaised"
    ALERT_CLEARED = "AlertCleared"
    TEXT_MESSAGE = "TextMessage"
    DEVICE_STATUS = "DeviceStatus"
    CAREGIVER_ACK = "CaregiverAck"

    @classmethod
    def parse(cls, text: str) -> "MessageKind":
        for member in cls:
            if member.value == text:
                return member
        raise ValueError(f"unknown message kind: {text!r}")


@dataclass(frozen=True)
class Transport:
    """Delivery channel metadata; behavior in simulation is identical."""

    name: str
    requires_connectivity: bool


TRANSPORTS: dict[str, Transport] = {
    "wifi": Transport("wifi", requires_connectivity=True),
    "gsm": Transport("gsm", requires_connectivity=False),
}


def transport_for_kind(kind: MessageKind) -> Transport:
    """Digests ride the connectivity-free channel; everything else wifi."""
    if kind is MessageKind.TEXT_MESSAGE:
        return TRANSPORTS["gsm"]
    return TRANSPORTS["wifi"]


_RESOLUTIONS = {"Acknowledged", "ClearedByDeparture"}

# Required payload fields per kind; extra fields pass through untouched.
_REQUIRED_FIELDS: dict[MessageKind, dict[str, type]] = {
    MessageKind.ALERT_RAISED: {
        "alert_id": str,
        "person_id": str,
        "fruit": str,
        "confidence": float,
        "message": str,
        "raised_at": int,
    },
    MessageKind.ALERT_CLEARED: {
        "alert_id": str,
        "resolution": str,
        "resolved_at": int,
    },
    MessageKind.TEXT_MESSAGE: {"person_id": str, "date": str, "body": str},
    MessageKind.DEVICE_STATUS: {"status": str},
    MessageKind.CAREGIVER_ACK: {"alert_id": str, "caregiver_id": str},
}


def validate_payload(kind: MessageKind, payload: Mapping[str, object]) -> None:
    """Reject payloads missing or mistyping their kind's required fields."""
    for field_name, expected in _REQUIRED_FIELDS[kind].items():
        if field_name not in payload:
            raise PublishError(f"{kind.value} payload missing {field_name!r}")
        value = payload[field_name]
        if expected is float:
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        elif expected is int:
            ok = isinstance(value, int) and not isinstance(value, bool)
        else:
            ok = isinstance(value, expected)
        if not ok:
            raise PublishError(
                f"{kind.value} payload field {field_name!r} must be {expected.__name__}"
            )
    if kind is MessageKind.ALERT_RAISED:
        confidence = payload["confidence"]
        if not 0.0 <= float(confidence) <= 1.0:  # type: ignore[arg-type]
            raise PublishError(f"confidence out of range: {confidence}")
        try:
            FruitClass.parse(str(payload["fruit"]))
        except ValueError as exc:
            raise PublishError(str(exc)) from None
    if kind is MessageKind.ALERT_CLEARED:
        if payload["resolution"] not in _RESOLUTIONS:
            raise PublishError(f"unknown resolution: {payload['resolution']!r}")


@dataclass(frozen=True)
class HubMessage:
    """One routed message; payload shape depends on kind."""

    msg_id: str
    kind: MessageKind
    device_id: str
    payload: Mapping[str, object]
    published_at: int

    def __post_init__(self):
        if not self.msg_id:
            raise PublishError("msg_id must be non-empty")
        if not self.device_id:
            raise PublishError("device_id must be non-empty")
        if self.published_at < 0:
            raise PublishError(f"published_at must be non-negative: {self.published_at}")
        validate_payload(self.kind, self.payload)


@dataclass(frozen=True)
class PublishReceipt:
    msg_id: str
    seq: int
    delivered_to: int


def message_to_record(seq: int, msg: HubMessage) -> dict:
    return {
        "seq": seq,
        "msg_id": msg.msg_id,
        "kind": msg.kind.value,
        "device_id": msg.device_id,
        "published_at": msg.published_at,
        "payload": dict(msg.payload),
    }


def message_from_record(record: Mapping[str, object]) -> tuple[int, HubMessage]:
    msg = HubMessage(
        msg_id=str(record["msg_id"]),
        kind=MessageKind.parse(str(record["kind"])),
        device_id=str(record["device_id"]),
        payload=dict(record["payload"]),  # type: ignore[arg-type]
        published_at=int(record["published_at"]),  # type: ignore[arg-type]
    )
    return int(record["seq"]), msg  # type: ignore[arg-type]


def replay_log(path: str | Path) -> list[tuple[int, HubMessage]]:
    """Load a hub log file; sequence numbers must be 1..n without gaps."""
    entries: list[tuple[int, HubMessage]] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                entry = message_from_record(record)
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise PublishError(f"corrupt log at line {line_no}: {exc}") from None
            entries.append(entry)
    for position, (seq, _) in enumerate(entries, start=1):
        if seq != position:
            raise PublishError(f"log sequence gap: expected {position}, found {seq}")
    return entries


class Subscription:
    """Pull-based message stream for one client.

    `poll` returns matching entries past the committed cursor without
    advancing it; `commit` moves the cursor monotonically. The cursor is
    stored on the hub keyed by client id, so a replacement subscription
    resumes where the old one committed.
    """

    def __init__(self, hub: "CloudHub", client_id: str, kinds: frozenset[MessageKind] | None):
        self._hub = hub
        self.client_id = client_id
        self.kinds = kinds
        self.active = True

    def matches(self, msg: HubMessage) -> bool:
        return self.kinds is None or msg.kind in self.kinds

    @property
    def cursor(self) -> int:
        return self._hub._cursor_of(self.client_id)

    def poll(self, limit: int | None = None) -> list[tuple[int, HubMessage]]:
        if not self.active:
            raise SubscriptionClosed(f"subscription for {self.client_id!r} was replaced")
        return self._hub.messages_after(self.cursor, kinds=self.kinds, limit=limit)

    def commit(self, seq: int) -> None:
        if not self.active:
            raise SubscriptionClosed(f"subscription for {self.client_id!r} was replaced")
        self._hub._commit_cursor(self.client_id, seq)

    def close(self) -> None:
        self.active = False


class CloudHub:
    """In-process hub with an optional durable JSONL log."""

    def __init__(self, log_path: str | Path | None = None, start_date: str = "2024-01-01"):
        self._lock = threading.RLock()
        self._entries: list[tuple[int, HubMessage]] = []
        self._by_msg_id: dict[str, int] = {}
        self._subscriptions: dict[str, Subscription] = {}
        self._cursors: dict[str, int] = {}
        # device_id -> (seconds of day, compose callback, next fire tick)
        self._schedules: dict[
            str, tuple[int, Callable[[str], Mapping[str, object]], int]
        ] = {}
        self._now = 0
        try:
            self._start_date = _dt.date.fromisoformat(start_date)
        except ValueError as exc:
            raise ConfigError(f"invalid start_date: {exc}") from None
        self._log_path = Path(log_path) if log_path is not None else None
        self._log_fh = None
        if self._log_path is not None:
            try:
                self._log_fh = open(self._log_path, "a", encoding="utf-8")
            except OSError as exc:
                raise PublishError(f"cannot open log: {exc}") from None

    @classmethod
    def open(cls, log_path: str | Path, start_date: str = "2024-01-01") -> "CloudHub":
        """Recover a hub from an existing log, then continue appending."""
        entries = replay_log(log_path) if Path(log_path).exists() else []
        hub = cls(log_path=log_path, start_date=start_date)
        with hub._lock:
            hub._entries = entries
            hub._by_msg_id = {msg.msg_id: seq for seq, msg in entries}
            if entries:
                hub._now = max(msg.published_at for _, msg in entries)
        return hub

    def close(self) -> None:
        with self._lock:
            if self._log_fh is not None:
                self._log_fh.close()
                self._log_fh = None

    # --- Clock ---------------------------------------------------------

    @property
    def now(self) -> int:
        return self._now

    def date_for_tick(self, tick: int) -> str:
        """Calendar date of a tick; tick 0 is midnight on the start date."""
        return (self._start_date + _dt.timedelta(days=tick // TICKS_PER_DAY)).isoformat()

    # --- Publish / query -------------------------------------------------

    def publish(self, msg: HubMessage) -> PublishReceipt:
        """Append durably, then expose to subscribers; dedup by msg_id."""
        with self._lock:
            existing = self._by_msg_id.get(msg.msg_id)
            if existing is not None:
                return PublishReceipt(msg_id=msg.msg_id, seq=existing, delivered_to=0)
            seq = len(self._entries) + 1
            if self._log_fh is not None:
                try:
                    self._log_fh.write(
                        json.dumps(message_to_record(seq, msg), sort_keys=True) + "\n"
                    )
                    self._log_fh.flush()
                except (OSError, ValueError) as exc:
                    raise PublishError(f"log append failed: {exc}") from None
            self._entries.append((seq, msg))
            self._by_msg_id[msg.msg_id] = seq
            self._now = max(self._now, msg.published_at)
            delivered_to = sum(
                1 for sub in self._subscriptions.values() if sub.active and sub.matches(msg)
            )
            return PublishReceipt(msg_id=msg.msg_id, seq=seq, delivered_to=delivered_to)

    def messages_after(
        self,
        cursor: int,
        kinds: Iterable[MessageKind] | None = None,
        device_id: str | None = None,
        limit: int | None = None,
    ) -> list[tuple[int, HubMessage]]:
        """Log entries with seq > cursor, oldest first, optionally filtered."""
        wanted = frozenset(kinds) if kinds is not None else None
        out: list[tuple[int, HubMessage]] = []
        with self._lock:
            for seq, msg in self._entries[cursor:]:
                if wanted is not None and msg.kind not in wanted:
                    continue
                if device_id is not None and msg.device_id != device_id:
                    continue
                out.append((seq, msg))
                if limit is not None and len(out) >= limit:
                    break
        return out

    def get_by_msg_id(self, msg_id: str) -> HubMessage | None:
        with self._lock:
            seq = self._by_msg_id.get(msg_id)
            return None if seq is None else self._entries[seq - 1][1]

    def log_entries(self) -> tuple[tuple[int, HubMessage], ...]:
        with self._lock:
            return tuple(self._entries)

    # --- Subscriptions ----------------------------------------------------

    def subscribe(
        self, client_id: str, kinds: Iterable[MessageKind] | None = None
    ) -> Subscription:
        """Open a stream; a second subscribe under the same id replaces it."""
        if not client_id:
            raise ConfigError("client_id must be non-empty")
        wanted = frozenset(kinds) if kinds is not None else None
        with self._lock:
            old = self._subscriptions.get(client_id)
            if old is not None:
                old.close()
            sub = Subscription(self, client_id, wanted)
            self._subscriptions[client_id] = sub
            self._cursors.setdefault(client_id, 0)
            return sub

    def _cursor_of(self, client_id: str) -> int:
        with self._lock:
            return self._cursors.get(client_id, 0)

    def _commit_cursor(self, client_id: str, seq: int) -> None:
        with self._lock:
            current = self._cursors.get(client_id, 0)
            if seq > current:
                self._cursors[client_id] = seq

    # --- Acknowledgment ---------------------------------------------------

    def find_alert_device(self, alert_id: str) -> str | None:
        """Device that raised the alert, from the log."""
        with self._lock:
            for _, msg in self._entries:
                if (
                    msg.kind is MessageKind.ALERT_RAISED
                    and msg.payload.get("alert_id") == alert_id
                ):
                    return msg.device_id
        return None

    def acknowledge(self, alert_id: str, caregiver_id: str) -> PublishReceipt:
        """Route a caregiver ack to the device that raised the alert.

        The ack message id is a pure function of (alert_id, caregiver_id),
        so retries collapse onto the first publish.
        """
        if not caregiver_id:
            raise ConfigError("caregiver_id must be non-empty")
        device_id = self.find_alert_device(alert_id)
        if device_id is None:
            raise AlertNotFound(f"no AlertRaised with alert_id {alert_id!r}")
        msg = HubMessage(
            msg_id=f"ack-{alert_id}-{caregiver_id}",
            kind=MessageKind.CAREGIVER_ACK,
            device_id=device_id,
            payload={"alert_id": alert_id, "caregiver_id": caregiver_id},
            published_at=self._now,
        )
        return self.publish(msg)

    # --- Digest schedule ----------------------------------------------------

    def schedule_digest(
        self,
        device_id: str,
        time_of_day: str,
        compose: Callable[[str], Mapping[str, object]],
    ) -> None:
        """Publish a TextMessage for `device_id` daily at HH:MM.

        `compose(date)` supplies the payload when the time arrives.
        Scheduling again for the same device replaces the entry. A
        schedule created exactly at its own time first fires the next day.
        """
        seconds = parse_time_of_day(time_of_day)
        with self._lock:
            day = self._now // TICKS_PER_DAY
            first = day * TICKS_PER_DAY + seconds
            if first <= self._now:
                first += TICKS_PER_DAY
            self._schedules[device_id] = (seconds, compose, first)

    def next_fire(self) -> int | None:
        """Earliest pending digest fire tick, if any schedule exists."""
        with self._lock:
            if not self._schedules:
                return None
            return min(next_fire for _, _, next_fire in self._schedules.values())

    def advance_to(self, tick: int) -> list[PublishReceipt]:
        """Move the hub clock forward, firing any digests crossed in order."""
        if tick < self._now:
            raise ConfigError(f"clock cannot move backwards: {tick} < {self._now}")
        receipts: list[PublishReceipt] = []
        with self._lock:
            while True:
                due = [
                    (next_fire, device_id)
                    for device_id, (_, _, next_fire) in self._schedules.items()
                    if next_fire <= tick
                ]
                if not due:
                    break
                fire_at, device_id = min(due)
                seconds, compose, _ = self._schedules[device_id]
                self._schedules[device_id] = (seconds, compose, fire_at + TICKS_PER_DAY)
                self._now = max(self._now, fire_at)
                date = self.date_for_tick(fire_at)
                payload = compose(date)
                msg = HubMessage(
                    msg_id=f"{device_id}-digest-{date}",
                    kind=MessageKind.TEXT_MESSAGE,
                    device_id=device_id,
                    payload=dict(payload),
                    published_at=fire_at,
                )
                receipts.append(self.publish(msg))
            self._now = tick
        return receipts


def parse_time_of_day(text: str) -> int:
    """HH:MM on a 24-hour clock, as seconds after midnight."""
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"time of day must be HH:MM, got {text!r}")
    try:
        hours, minutes = int(parts[0]), int(parts[1])
    except ValueError:
        raise ConfigError(f"time of day must be HH:MM, got {text!r}") from None
    if not (0 <= hours <= 23 and 0 <= minutes <= 59):
        raise ConfigError(f"time of day out of range: {text!r}")
    return hours * 3600 + minutes * 60
