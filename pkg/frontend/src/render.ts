/**
 * HTML rendering for the console views.
 *
 * Pure string builders so they are testable without a DOM; the page
 * shell assigns the output to innerHTML and wires click handlers by
 * data attributes.
 */

import type {
  ConnectionState,
  ConsoleAlertView,
  DigestGroup,
} from "./types.js";

export function escapeHtml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;")
    .replaceAll("'", "&#39;");
}

/** Unix-second stamps render as UTC clock time; small values as ticks. */
export function formatRaisedAt(raisedAt: number): string {
  if (raisedAt >= 1_000_000_000) {
    const iso = new Date(raisedAt * 1000).toISOString();
    return iso.slice(0, 19).replace("T", " ") + " UTC";
  }
  return `tick ${raisedAt}`;
}

export function renderStatusBadge(state: ConnectionState): string {
  return `<span class="status status-${state}">${state}</span>`;
}

function renderAlertRow(row: ConsoleAlertView): string {
  const id = escapeHtml(row.alert_id);
  const pct = Math.round(row.confidence * 100);
  let action: string;
  switch (row.state) {
    case "Active":
      action = `<button data-ack="${id}">Acknowledge</button>`;
      break;
    case "AckPending":
      action = `<button data-ack="${id}" disabled>Acknowledging</button>`;
      break;
    case "Stale":
      action = `<button data-ack="${id}">Acknowledge</button>`;
      break;
    default:
      action = "";
      break;
  }
  return [
    `<article class="alert alert-${row.state.toLowerCase()}" data-alert-id="${id}">`,
    `<header><strong>${escapeHtml(row.fruit)}</strong>`,
    `<span class="badge">${escapeHtml(row.state)}</span></header>`,
    `<p class="message">${escapeHtml(row.message)}</p>`,
    `<p class="meta">${escapeHtml(row.device_id)} at ${escapeHtml(
      formatRaisedAt(row.raised_at),
    )}, confidence ${pct}%</p>`,
    action,
    `</article>`,
  ].join("");
}

/** The live alert list, newest first, with the connection banner. */
export function renderAlertFeed(
  rows: ConsoleAlertView[],
  connection: ConnectionState,
): string {
  const parts: string[] = [];
  if (connection !== "live") {
    parts.push(`<div class="banner banner-${connection}">${connection}</div>`);
  }
  if (rows.length === 0) {
    parts.push(`<p class="empty">no alerts yet</p>`);
  } else {
    for (const row of rows) parts.push(renderAlertRow(row));
  }
  return parts.join("");
}

/** Digest cards grouped by date, newest date first. */
export function renderDigests(groups: DigestGroup[]): string {
  if (groups.length === 0) return `<p class="empty">no digests yet</p>`;
  const parts: string[] = [];
  for (const group of groups) {
    parts.push(`<section class="digest-day" data-date="${escapeHtml(group.date)}">`);
    parts.push(`<h3>${escapeHtml(group.date)}</h3>`);
    for (const card of group.cards) {
      if (card.empty) {
        parts.push(
          `<div class="digest-card digest-empty" data-msg-id="${escapeHtml(card.msg_id)}">` +
            `<p>no fruit consumed</p>` +
            `<p class="meta">${escapeHtml(card.device_id)}</p></div>`,
        );
        continue;
      }
      const nutrients = card.nutrients
        .map((n) => `<li>${escapeHtml(n)}</li>`)
        .join("");
      parts.push(
        `<div class="digest-card" data-msg-id="${escapeHtml(card.msg_id)}">` +
          `<pre class="digest-body">${escapeHtml(card.body)}</pre>` +
          `<ul class="nutrients">${nutrients}</ul>` +
          `<p class="meta">${escapeHtml(card.device_id)}</p></div>`,
      );
    }
    parts.push(`</section>`);
  }
  return parts.join("");
}

export function renderToast(text: string | null): string {
  if (text === null) return "";
  return `<div class="toast toast-error">${escapeHtml(text)}</div>`;
}
