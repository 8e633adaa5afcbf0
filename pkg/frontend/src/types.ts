/**
 * Wire and view types for the caregiver console.
 *
 * Every fact the console displays is a projection of hub log records,
 * so the view types carry the msg_ids they were built from. The console
 * itself never invents state; its one write path is the acknowledge
 * call, and even that only becomes visible through the hub messages it
 * causes.
 */

export type MessageKind =
  | "DeviceStatus"
  | "AlertRaised"
  | "AlertCleared"
  | "CaregiverAck"
  | "TextMessage";

/** One log record as served by `GET /messages` and the push stream. */
export interface HubRecord {
  seq: number;
  msg_id: string;
  kind: MessageKind;
  device_id: string;
  published_at: number;
  payload: Record<string, unknown>;
}

const KINDS: readonly string[] = [
  "DeviceStatus",
  "AlertRaised",
  "AlertCleared",
  "CaregiverAck",
  "TextMessage",
];

/**
 * Narrows a decoded JSON value to a HubRecord, or returns null when the
 * shape is off. Malformed frames are dropped rather than crashing the
 * feed; the hub log remains the source of truth either way.
 */
export function asHubRecord(value: unknown): HubRecord | null {
  if (typeof value !== "object" || value === null) return null;
  const rec = value as Record<string, unknown>;
  if (typeof rec.seq !== "number") return null;
  if (typeof rec.msg_id !== "string" || rec.msg_id === "") return null;
  if (typeof rec.kind !== "string" || !KINDS.includes(rec.kind)) return null;
  if (typeof rec.device_id !== "string") return null;
  if (typeof rec.published_at !== "number") return null;
  if (typeof rec.payload !== "object" || rec.payload === null) return null;
  return rec as unknown as HubRecord;
}

/** Display states for one alert row. */
export type AlertViewState =
  | "Active"
  | "AckPending"
  | "Acknowledged"
  | "ClearedByDeparture"
  | "Stale";

/** One row of the alert feed. */
export interface ConsoleAlertView {
  alert_id: string;
  device_id: string;
  fruit: string;
  confidence: number;
  message: string;
  raised_at: number;
  state: AlertViewState;
  /** Hub messages this row was built from, in arrival order. */
  source_msg_ids: string[];
}

/** One daily digest card. */
export interface DigestCard {
  msg_id: string;
  device_id: string;
  date: string;
  body: string;
  nutrients: string[];
  eaten: Record<string, number>;
  /** True when the day's ledger recorded nothing. */
  empty: boolean;
}

/** Digest cards for one calendar date; groups are listed newest date first. */
export interface DigestGroup {
  date: string;
  cards: DigestCard[];
}

export type ConnectionState = "connecting" | "live" | "reconnecting";
