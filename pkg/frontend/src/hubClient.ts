/**
 * HTTP client for the hub: poll, push stream, and the acknowledge call.
 *
 * The console is configured with exactly one base URL plus an optional
 * client token; the token travels in the x-client-token header on every
 * request. Reads go through `poll` or the long-lived `stream`; the only
 * write this client exposes is `acknowledge`.
 */

import { SseParser } from "./sse.js";
import { asHubRecord, type HubRecord, type MessageKind } from "./types.js";

export interface HubClientOptions {
  baseUrl: string;
  token?: string;
  /** Injectable for tests; defaults to the global fetch. */
  fetchFn?: typeof fetch;
}

export class HubRequestError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(`hub request failed (${status}): ${detail}`);
    this.name = "HubRequestError";
  }
}

/** Raised when an acknowledge names an alert the hub has never seen. */
export class AlertNotFoundError extends HubRequestError {
  constructor(detail: string) {
    super(404, detail);
    this.name = "AlertNotFoundError";
  }
}

export interface PollResult {
  records: HubRecord[];
  cursor: number;
}

export interface StreamHandlers {
  onRecord: (record: HubRecord) => void;
  onStatus?: (state: "live" | "reconnecting") => void;
  signal: AbortSignal;
  /** Log cursor to resume past; a reconnect prefers the last event id. */
  after?: number;
  kinds?: MessageKind[];
}

/** Fallback delay between reconnect attempts, until the server hints one. */
const DEFAULT_RETRY_MS = 1000;

function sleep(ms: number, signal: AbortSignal): Promise<void> {
  return new Promise((resolve) => {
    const timer = setTimeout(done, ms);
    function done(): void {
      clearTimeout(timer);
      signal.removeEventListener("abort", done);
      resolve();
    }
    signal.addEventListener("abort", done, { once: true });
  });
}

export class HubClient {
  private readonly base: string;
  private readonly token: string | undefined;
  private readonly fetchFn: typeof fetch;

  constructor(options: HubClientOptions) {
    this.base = options.baseUrl.replace(/\/+$/, "");
    this.token = options.token;
    this.fetchFn = options.fetchFn ?? fetch;
  }

  private headers(extra?: Record<string, string>): Record<string, string> {
    const merged: Record<string, string> = { ...extra };
    if (this.token !== undefined) merged["x-client-token"] = this.token;
    return merged;
  }

  private url(
    path: string,
    params?: Record<string, string | number | undefined>,
  ): string {
    const query = Object.entries(params ?? {})
      .filter(([, value]) => value !== undefined && value !== "")
      .map(([key, value]) => `${key}=${encodeURIComponent(String(value))}`)
      .join("&");
    return query ? `${this.base}${path}?${query}` : `${this.base}${path}`;
  }

  async health(): Promise<{ status: string; messages: number }> {
    const res = await this.fetchFn(this.url("/healthz"));
    if (!res.ok) throw new HubRequestError(res.status, await res.text());
    return (await res.json()) as { status: string; messages: number };
  }

  /** Reads log records past `after`, oldest first, with the next cursor. */
  async poll(
    after: number,
    options?: { kinds?: MessageKind[]; limit?: number },
  ): Promise<PollResult> {
    const res = await this.fetchFn(
      this.url("/messages", {
        after,
        kinds: options?.kinds?.join(","),
        limit: options?.limit,
      }),
      { headers: this.headers() },
    );
    if (!res.ok) throw new HubRequestError(res.status, await res.text());
    const body = (await res.json()) as { messages: unknown[]; cursor: number };
    const records: HubRecord[] = [];
    for (const item of body.messages) {
      const record = asHubRecord(item);
      if (record) records.push(record);
    }
    return { records, cursor: body.cursor };
  }

  /**
   * Routes a caregiver acknowledgment for one alert. Throws
   * AlertNotFoundError when the hub has no AlertRaised under that id.
   */
  async acknowledge(
    alertId: string,
    caregiverId: string,
  ): Promise<{ msgId: string; seq: number }> {
    const res = await this.fetchFn(
      this.url(`/alerts/${encodeURIComponent(alertId)}/ack`),
      {
        method: "POST",
        headers: this.headers({ "content-type": "application/json" }),
        body: JSON.stringify({ caregiver_id: caregiverId }),
      },
    );
    if (res.status === 404) throw new AlertNotFoundError(await res.text());
    if (!res.ok) throw new HubRequestError(res.status, await res.text());
    const body = (await res.json()) as { msg_id: string; seq: number };
    return { msgId: body.msg_id, seq: body.seq };
  }

  /**
   * Consumes the push stream until the signal aborts.
   *
   * Each delivered record's sequence number becomes the resume point:
   * after a dropped connection the client reports "reconnecting",
   * waits out the server-hinted retry delay, and reopens the stream
   * with Last-Event-ID so no record is skipped. Token or query errors
   * (401, 400) are not retried; they reject the returned promise.
   */
  async stream(handlers: StreamHandlers): Promise<void> {
    const { signal } = handlers;
    let cursor = handlers.after ?? 0;
    let lastEventId: string | undefined;
    let retryMs = DEFAULT_RETRY_MS;

    while (!signal.aborted) {
      try {
        const headers = this.headers({ accept: "text/event-stream" });
        if (lastEventId !== undefined) headers["last-event-id"] = lastEventId;
        const res = await this.fetchFn(
          this.url("/stream", {
            after: cursor,
            kinds: handlers.kinds?.join(","),
          }),
          { headers, signal },
        );
        if (res.status === 401 || res.status === 400) {
          throw new HubRequestError(res.status, await res.text());
        }
        if (!res.ok || res.body === null) {
          throw new Error(`stream unavailable (${res.status})`);
        }
        handlers.onStatus?.("live");

        const parser = new SseParser();
        const reader = res.body.getReader();
        const decoder = new TextDecoder();
        for (;;) {
          const { done, value } = await reader.read();
          if (done) break;
          const events = parser.push(decoder.decode(value, { stream: true }));
          for (const event of events) {
            if (event.id !== undefined) {
              lastEventId = event.id;
              const seq = Number(event.id);
              if (Number.isInteger(seq)) cursor = seq;
            }
            if (event.event !== "message") continue;
            let decoded: unknown;
            try {
              decoded = JSON.parse(event.data);
            } catch {
              continue;
            }
            const record = asHubRecord(decoded);
            if (record) handlers.onRecord(record);
          }
          if (parser.retryMs !== undefined) retryMs = parser.retryMs;
        }
        // Server closed an otherwise healthy stream; reconnect below.
      } catch (error) {
        if (signal.aborted) return;
        if (error instanceof HubRequestError) throw error;
      }
      if (signal.aborted) return;
      handlers.onStatus?.("reconnecting");
      await sleep(retryMs, signal);
    }
  }
}
