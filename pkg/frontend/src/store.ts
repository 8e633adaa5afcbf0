/**
 * The console's single state store.
 *
 * Alert rows and digest cards are projections of hub records applied in
 * log order; duplicate deliveries collapse on msg_id, so replays and
 * resumed streams are harmless. The store adds exactly two marks of its
 * own, both scoped to the acknowledge flow: an ack-in-flight flag for
 * the optimistic paint, and a stale flag for rows the hub disowned.
 * Neither ever contradicts a hub record, and a row's durable state only
 * changes when a hub record says so.
 */

import type {
  AlertViewState,
  ConnectionState,
  ConsoleAlertView,
  DigestCard,
  DigestGroup,
  HubRecord,
} from "./types.js";

interface AlertEntry {
  alertId: string;
  deviceId: string;
  fruit: string;
  confidence: number;
  message: string;
  raisedAt: number;
  hubState: "Active" | "Acknowledged" | "ClearedByDeparture";
  ackInFlight: boolean;
  stale: boolean;
  sourceMsgIds: string[];
}

function viewState(entry: AlertEntry): AlertViewState {
  if (entry.stale) return "Stale";
  if (entry.hubState !== "Active") return entry.hubState;
  if (entry.ackInFlight) return "AckPending";
  return "Active";
}

export class ConsoleStore {
  private readonly seenMsgIds = new Set<string>();
  private readonly alerts = new Map<string, AlertEntry>();
  /** Alert ids, newest arrival first. */
  private alertOrder: string[] = [];
  private digestCards: DigestCard[] = [];
  private connectionState: ConnectionState = "connecting";
  private lastErrorText: string | null = null;
  private highWaterSeq = 0;
  private readonly listeners = new Set<() => void>();

  subscribe(listener: () => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  // --- Hub record intake ----------------------------------------------------

  /**
   * Applies one hub record. Records already seen (same msg_id) only
   * advance the cursor. Returns true when the view changed.
   */
  apply(record: HubRecord): boolean {
    if (record.seq > this.highWaterSeq) this.highWaterSeq = record.seq;
    if (this.seenMsgIds.has(record.msg_id)) return false;
    this.seenMsgIds.add(record.msg_id);

    let changed = false;
    switch (record.kind) {
      case "AlertRaised":
        changed = this.applyRaised(record);
        break;
      case "AlertCleared":
        changed = this.applyCleared(record);
        break;
      case "CaregiverAck":
        changed = this.applyAck(record);
        break;
      case "TextMessage":
        changed = this.applyDigest(record);
        break;
      default:
        break;
    }
    if (changed) this.emit();
    return changed;
  }

  private applyRaised(record: HubRecord): boolean {
    const p = record.payload;
    const alertId = typeof p.alert_id === "string" ? p.alert_id : null;
    if (alertId === null) return false;

    const existing = this.alerts.get(alertId);
    if (existing) {
      // A re-raise under a fresh msg_id still describes the same alert.
      existing.sourceMsgIds.push(record.msg_id);
      return true;
    }
    this.alerts.set(alertId, {
      alertId,
      deviceId: record.device_id,
      fruit: typeof p.fruit === "string" ? p.fruit : "?",
      confidence: typeof p.confidence === "number" ? p.confidence : 0,
      message: typeof p.message === "string" ? p.message : "",
      raisedAt: typeof p.raised_at === "number" ? p.raised_at : record.published_at,
      hubState: "Active",
      ackInFlight: false,
      stale: false,
      sourceMsgIds: [record.msg_id],
    });
    this.alertOrder.unshift(alertId);
    return true;
  }

  private applyCleared(record: HubRecord): boolean {
    const p = record.payload;
    const alertId = typeof p.alert_id === "string" ? p.alert_id : null;
    if (alertId === null) return false;
    const entry = this.alerts.get(alertId);
    if (!entry) return false;
    const resolution = p.resolution;
    if (resolution !== "Acknowledged" && resolution !== "ClearedByDeparture") {
      return false;
    }
    entry.hubState = resolution;
    entry.ackInFlight = false;
    entry.stale = false;
    entry.sourceMsgIds.push(record.msg_id);
    return true;
  }

  private applyAck(record: HubRecord): boolean {
    const p = record.payload;
    const alertId = typeof p.alert_id === "string" ? p.alert_id : null;
    if (alertId === null) return false;
    const entry = this.alerts.get(alertId);
    if (!entry) return false;
    entry.sourceMsgIds.push(record.msg_id);
    // Someone's ack is on the log; paint the row as pending resolution.
    if (entry.hubState === "Active") entry.ackInFlight = true;
    return true;
  }

  private applyDigest(record: HubRecord): boolean {
    const p = record.payload;
    if (typeof p.date !== "string" || typeof p.body !== "string") return false;
    const nutrients = Array.isArray(p.nutrients)
      ? p.nutrients.filter((n): n is string => typeof n === "string")
      : [];
    const eaten =
      typeof p.eaten === "object" && p.eaten !== null
        ? (p.eaten as Record<string, number>)
        : {};
    this.digestCards.push({
      msg_id: record.msg_id,
      device_id: record.device_id,
      date: p.date,
      body: p.body,
      nutrients,
      eaten,
      empty: Object.keys(eaten).length === 0,
    });
    return true;
  }

  // --- Acknowledge lifecycle ------------------------------------------------

  /**
   * Marks an acknowledge attempt as in flight. Refused (returns false)
   * for unknown rows, rows already resolved by the hub, and rows with
   * an attempt already pending, so repeated clicks collapse to one call.
   */
  beginAck(alertId: string): boolean {
    const entry = this.alerts.get(alertId);
    if (!entry) return false;
    if (entry.hubState !== "Active") return false;
    if (entry.ackInFlight) return false;
    entry.ackInFlight = true;
    this.emit();
    return true;
  }

  /** The hub accepted the ack; the stream will deliver the outcome. */
  ackDelivered(alertId: string): void {
    const entry = this.alerts.get(alertId);
    if (!entry) return;
    if (entry.stale) {
      entry.stale = false;
      this.emit();
    }
  }

  /** Rolls back an optimistic ack; not-found marks the row stale. */
  ackFailed(alertId: string, options: { notFound: boolean }): void {
    const entry = this.alerts.get(alertId);
    if (!entry) return;
    entry.ackInFlight = false;
    if (options.notFound) {
      entry.stale = true;
      this.lastErrorText = `alert ${alertId} is not known to the hub`;
    } else {
      this.lastErrorText = `acknowledge failed for ${alertId}; try again`;
    }
    this.emit();
  }

  // --- Connection and errors --------------------------------------------------

  setConnection(state: ConnectionState): void {
    if (state === this.connectionState) return;
    this.connectionState = state;
    this.emit();
  }

  connection(): ConnectionState {
    return this.connectionState;
  }

  pushError(text: string): void {
    this.lastErrorText = text;
    this.emit();
  }

  clearError(): void {
    if (this.lastErrorText === null) return;
    this.lastErrorText = null;
    this.emit();
  }

  lastError(): string | null {
    return this.lastErrorText;
  }

  // --- Views ------------------------------------------------------------------

  /** Alert rows, newest first. */
  alertViews(): ConsoleAlertView[] {
    const views: ConsoleAlertView[] = [];
    for (const alertId of this.alertOrder) {
      const entry = this.alerts.get(alertId);
      if (!entry) continue;
      views.push({
        alert_id: entry.alertId,
        device_id: entry.deviceId,
        fruit: entry.fruit,
        confidence: entry.confidence,
        message: entry.message,
        raised_at: entry.raisedAt,
        state: viewState(entry),
        source_msg_ids: [...entry.sourceMsgIds],
      });
    }
    return views;
  }

  /** Digest cards grouped by date, newest date first. */
  digestGroups(): DigestGroup[] {
    const byDate = new Map<string, DigestCard[]>();
    for (const card of this.digestCards) {
      const group = byDate.get(card.date);
      if (group) group.push(card);
      else byDate.set(card.date, [card]);
    }
    const dates = [...byDate.keys()].sort().reverse();
    return dates.map((date) => ({ date, cards: byDate.get(date) ?? [] }));
  }

  /** Highest log sequence applied; streams resume past this point. */
  cursor(): number {
    return this.highWaterSeq;
  }
}
