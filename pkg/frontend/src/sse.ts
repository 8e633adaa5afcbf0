/**
 * Incremental parser for text/event-stream bodies.
 *
 * The browser EventSource cannot attach the hub's client-token header,
 * so the console reads the stream through fetch and feeds decoded
 * chunks into this parser. Chunks may split lines or events anywhere.
 */

export interface SseEvent {
  /** Last seen `id:` field at dispatch time, if any. */
  id?: string;
  event: string;
  data: string;
}

export class SseParser {
  /** Reconnect delay requested by the server's last `retry:` line. */
  retryMs: number | undefined;

  private buffer = "";
  private lastId: string | undefined;
  private eventName = "message";
  private dataLines: string[] = [];

  /** Feeds one decoded chunk; returns the events it completed. */
  push(chunk: string): SseEvent[] {
    this.buffer += chunk;
    const events: SseEvent[] = [];
    let newline: number;
    while ((newline = this.buffer.indexOf("\n")) >= 0) {
      let line = this.buffer.slice(0, newline);
      this.buffer = this.buffer.slice(newline + 1);
      if (line.endsWith("\r")) line = line.slice(0, -1);
      const event = this.feedLine(line);
      if (event) events.push(event);
    }
    return events;
  }

  private feedLine(line: string): SseEvent | undefined {
    if (line === "") return this.dispatch();
    if (line.startsWith(":")) return undefined;

    const colon = line.indexOf(":");
    const field = colon < 0 ? line : line.slice(0, colon);
    let value = colon < 0 ? "" : line.slice(colon + 1);
    if (value.startsWith(" ")) value = value.slice(1);

    switch (field) {
      case "id":
        this.lastId = value;
        break;
      case "event":
        this.eventName = value;
        break;
      case "data":
        this.dataLines.push(value);
        break;
      case "retry": {
        const ms = Number(value);
        if (Number.isInteger(ms) && ms >= 0) this.retryMs = ms;
        break;
      }
      default:
        break;
    }
    return undefined;
  }

  private dispatch(): SseEvent | undefined {
    if (this.dataLines.length === 0) {
      this.eventName = "message";
      return undefined;
    }
    const event: SseEvent = {
      id: this.lastId,
      event: this.eventName,
      data: this.dataLines.join("\n"),
    };
    this.eventName = "message";
    this.dataLines = [];
    return event;
  }
}
