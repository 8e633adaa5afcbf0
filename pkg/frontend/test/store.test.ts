import { describe, expect, it } from "vitest";

import { ConsoleStore } from "../src/store.js";
import type { HubRecord } from "../src/types.js";

const ALERT_MESSAGE = "Allergen detected – danger present";

function raised(
  seq: number,
  alertId: string,
  overrides?: Partial<HubRecord> & { payload?: Record<string, unknown> },
): HubRecord {
  return {
    seq,
    msg_id: overrides?.msg_id ?? `m-${seq}`,
    kind: "AlertRaised",
    device_id: overrides?.device_id ?? "fp-kitchen-1",
    published_at: 100 + seq,
    payload: {
      alert_id: alertId,
      person_id: "person-1",
      fruit: "Strawberry",
      confidence: 0.91,
      message: ALERT_MESSAGE,
      raised_at: 100 + seq,
      ...overrides?.payload,
    },
  };
}

function cleared(seq: number, alertId: string, resolution: string): HubRecord {
  return {
    seq,
    msg_id: `m-${seq}`,
    kind: "AlertCleared",
    device_id: "fp-kitchen-1",
    published_at: 100 + seq,
    payload: { alert_id: alertId, resolution, resolved_at: 100 + seq },
  };
}

function ack(seq: number, alertId: string, caregiverId: string): HubRecord {
  return {
    seq,
    msg_id: `ack-${alertId}-${caregiverId}`,
    kind: "CaregiverAck",
    device_id: "fp-kitchen-1",
    published_at: 100 + seq,
    payload: { alert_id: alertId, caregiver_id: caregiverId },
  };
}

function digest(
  seq: number,
  date: string,
  eaten: Record<string, number>,
  nutrients: string[] = [],
): HubRecord {
  return {
    seq,
    msg_id: `digest-${seq}`,
    kind: "TextMessage",
    device_id: "fp-kitchen-1",
    published_at: 100 + seq,
    payload: {
      person_id: "person-1",
      date,
      body: `Daily fruit digest for ${date}`,
      nutrients,
      eaten,
      transport: "gsm",
    },
  };
}

describe("alert rows", () => {
  it("lists alerts newest first", () => {
    const store = new ConsoleStore();
    store.apply(raised(1, "a-1"));
    store.apply(raised(2, "a-2"));
    expect(store.alertViews().map((r) => r.alert_id)).toEqual(["a-2", "a-1"]);
  });

  it("drops records whose msg_id was already applied", () => {
    const store = new ConsoleStore();
    expect(store.apply(raised(1, "a-1"))).toBe(true);
    expect(store.apply(raised(1, "a-1"))).toBe(false);
    expect(store.alertViews()).toHaveLength(1);
  });

  it("keeps one row when the same alert is re-raised under a new msg_id", () => {
    const store = new ConsoleStore();
    store.apply(raised(1, "a-1", { msg_id: "m-first" }));
    store.apply(raised(2, "a-1", { msg_id: "m-second" }));
    const rows = store.alertViews();
    expect(rows).toHaveLength(1);
    expect(rows[0]!.source_msg_ids).toEqual(["m-first", "m-second"]);
  });

  it("projects payload fields into the view", () => {
    const store = new ConsoleStore();
    store.apply(raised(1, "a-1"));
    const row = store.alertViews()[0]!;
    expect(row.device_id).toBe("fp-kitchen-1");
    expect(row.fruit).toBe("Strawberry");
    expect(row.confidence).toBeCloseTo(0.91, 12);
    expect(row.message).toBe(ALERT_MESSAGE);
    expect(row.raised_at).toBe(101);
    expect(row.state).toBe("Active");
  });

  it("updates state in place when the alert clears", () => {
    const store = new ConsoleStore();
    store.apply(raised(1, "a-1"));
    store.apply(raised(2, "a-2"));
    store.apply(cleared(3, "a-1", "Acknowledged"));
    const rows = store.alertViews();
    expect(rows.map((r) => r.alert_id)).toEqual(["a-2", "a-1"]);
    expect(rows[1]!.state).toBe("Acknowledged");
    expect(rows[0]!.state).toBe("Active");
  });

  it("records departure clears", () => {
    const store = new ConsoleStore();
    store.apply(raised(1, "a-1"));
    store.apply(cleared(2, "a-1", "ClearedByDeparture"));
    expect(store.alertViews()[0]!.state).toBe("ClearedByDeparture");
  });

  it("ignores clears for alerts it never saw", () => {
    const store = new ConsoleStore();
    expect(store.apply(cleared(1, "ghost", "Acknowledged"))).toBe(false);
    expect(store.alertViews()).toHaveLength(0);
  });

  it("paints a routed caregiver ack as pending resolution", () => {
    const store = new ConsoleStore();
    store.apply(raised(1, "a-1"));
    store.apply(ack(2, "a-1", "dana"));
    const row = store.alertViews()[0]!;
    expect(row.state).toBe("AckPending");
    expect(row.source_msg_ids).toContain("ack-a-1-dana");
  });

  it("never lets a late ack revive a resolved row", () => {
    const store = new ConsoleStore();
    store.apply(raised(1, "a-1"));
    store.apply(cleared(2, "a-1", "Acknowledged"));
    store.apply(ack(3, "a-1", "kim"));
    expect(store.alertViews()[0]!.state).toBe("Acknowledged");
  });

  it("traces every row back to applied hub msg_ids", () => {
    const store = new ConsoleStore();
    const records = [
      raised(1, "a-1"),
      raised(2, "a-2"),
      ack(3, "a-1", "dana"),
      cleared(4, "a-1", "Acknowledged"),
    ];
    for (const record of records) store.apply(record);
    const applied = new Set(records.map((r) => r.msg_id));
    for (const row of store.alertViews()) {
      expect(row.source_msg_ids.length).toBeGreaterThan(0);
      for (const msgId of row.source_msg_ids) {
        expect(applied.has(msgId)).toBe(true);
      }
    }
  });
});

describe("acknowledge lifecycle", () => {
  it("flips to AckPending optimistically and back on failure", () => {
    const store = new ConsoleStore();
    store.apply(raised(1, "a-1"));
    expect(store.beginAck("a-1")).toBe(true);
    expect(store.alertViews()[0]!.state).toBe("AckPending");
    store.ackFailed("a-1", { notFound: false });
    expect(store.alertViews()[0]!.state).toBe("Active");
    expect(store.lastError()).toContain("a-1");
  });

  it("collapses repeated clicks into one attempt", () => {
    const store = new ConsoleStore();
    store.apply(raised(1, "a-1"));
    expect(store.beginAck("a-1")).toBe(true);
    expect(store.beginAck("a-1")).toBe(false);
  });

  it("refuses acks for unknown or resolved rows", () => {
    const store = new ConsoleStore();
    expect(store.beginAck("ghost")).toBe(false);
    store.apply(raised(1, "a-1"));
    store.apply(cleared(2, "a-1", "ClearedByDeparture"));
    expect(store.beginAck("a-1")).toBe(false);
  });

  it("marks the row stale when the hub does not know the alert", () => {
    const store = new ConsoleStore();
    store.apply(raised(1, "a-1"));
    store.beginAck("a-1");
    store.ackFailed("a-1", { notFound: true });
    expect(store.alertViews()[0]!.state).toBe("Stale");
    expect(store.lastError()).toContain("a-1");
  });

  it("keeps a stale row stale through a failed retry", () => {
    const store = new ConsoleStore();
    store.apply(raised(1, "a-1"));
    store.beginAck("a-1");
    store.ackFailed("a-1", { notFound: true });
    store.clearError();
    expect(store.beginAck("a-1")).toBe(true);
    expect(store.alertViews()[0]!.state).toBe("Stale");
    store.ackFailed("a-1", { notFound: true });
    expect(store.alertViews()[0]!.state).toBe("Stale");
    expect(store.lastError()).toContain("a-1");
  });

  it("lifts the stale mark when a retried ack is accepted", () => {
    const store = new ConsoleStore();
    store.apply(raised(1, "a-1"));
    store.beginAck("a-1");
    store.ackFailed("a-1", { notFound: true });
    store.beginAck("a-1");
    store.ackDelivered("a-1");
    expect(store.alertViews()[0]!.state).toBe("AckPending");
  });

  it("settles to Acknowledged only when AlertCleared arrives", () => {
    const store = new ConsoleStore();
    store.apply(raised(1, "a-1"));
    store.beginAck("a-1");
    store.ackDelivered("a-1");
    expect(store.alertViews()[0]!.state).toBe("AckPending");
    store.apply(ack(2, "a-1", "dana"));
    expect(store.alertViews()[0]!.state).toBe("AckPending");
    store.apply(cleared(3, "a-1", "Acknowledged"));
    expect(store.alertViews()[0]!.state).toBe("Acknowledged");
  });
});

describe("digest cards", () => {
  it("groups digests by date, newest date first", () => {
    const store = new ConsoleStore();
    store.apply(digest(1, "2024-05-01", { Apple: 1 }));
    store.apply(digest(2, "2024-05-02", { Banana: 2 }));
    const groups = store.digestGroups();
    expect(groups.map((g) => g.date)).toEqual(["2024-05-02", "2024-05-01"]);
  });

  it("keeps same-day cards together in arrival order", () => {
    const store = new ConsoleStore();
    store.apply(digest(1, "2024-05-01", { Apple: 1 }));
    store.apply(digest(2, "2024-05-01", { Mango: 1 }));
    const groups = store.digestGroups();
    expect(groups).toHaveLength(1);
    expect(groups[0]!.cards.map((c) => c.msg_id)).toEqual([
      "digest-1",
      "digest-2",
    ]);
  });

  it("drops duplicate digest deliveries", () => {
    const store = new ConsoleStore();
    const record = digest(1, "2024-05-01", { Apple: 1 });
    store.apply(record);
    store.apply(record);
    expect(store.digestGroups()[0]!.cards).toHaveLength(1);
  });

  it("flags a day with an empty ledger", () => {
    const store = new ConsoleStore();
    store.apply(digest(1, "2024-05-01", {}));
    expect(store.digestGroups()[0]!.cards[0]!.empty).toBe(true);
  });

  it("carries the nutrient list through verbatim", () => {
    const store = new ConsoleStore();
    const nutrients = ["vitamin C and Manganese", "Vitamin K and Folate"];
    store.apply(digest(1, "2024-05-01", { Apple: 1, Strawberry: 1 }, nutrients));
    expect(store.digestGroups()[0]!.cards[0]!.nutrients).toEqual(nutrients);
  });

  it("ignores text messages that are not digests", () => {
    const store = new ConsoleStore();
    const record: HubRecord = {
      seq: 1,
      msg_id: "m-1",
      kind: "TextMessage",
      device_id: "fp-kitchen-1",
      published_at: 101,
      payload: { note: "hello" },
    };
    expect(store.apply(record)).toBe(false);
    expect(store.digestGroups()).toHaveLength(0);
  });
});

describe("store bookkeeping", () => {
  it("advances the cursor even across duplicate deliveries", () => {
    const store = new ConsoleStore();
    store.apply(raised(3, "a-1", { msg_id: "m-x" }));
    expect(store.cursor()).toBe(3);
    store.apply({ ...raised(9, "a-1"), msg_id: "m-x" });
    expect(store.cursor()).toBe(9);
    expect(store.alertViews()).toHaveLength(1);
  });

  it("notifies subscribers on changes and only on changes", () => {
    const store = new ConsoleStore();
    let calls = 0;
    const unsubscribe = store.subscribe(() => {
      calls += 1;
    });
    store.setConnection("live");
    store.setConnection("live");
    expect(calls).toBe(1);
    store.apply(raised(1, "a-1"));
    expect(calls).toBe(2);
    store.apply(raised(1, "a-1"));
    expect(calls).toBe(2);
    unsubscribe();
    store.setConnection("reconnecting");
    expect(calls).toBe(2);
    expect(store.connection()).toBe("reconnecting");
  });

  it("keeps DeviceStatus records off the views", () => {
    const store = new ConsoleStore();
    const record: HubRecord = {
      seq: 1,
      msg_id: "m-1",
      kind: "DeviceStatus",
      device_id: "fp-kitchen-1",
      published_at: 101,
      payload: { status: "online" },
    };
    expect(store.apply(record)).toBe(false);
    expect(store.alertViews()).toHaveLength(0);
    expect(store.digestGroups()).toHaveLength(0);
    expect(store.cursor()).toBe(1);
  });
});
