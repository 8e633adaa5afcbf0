/**
 * Page shell: wires the hub client, the store, and the renderers into
 * the static page. One event loop, one store, one long-lived stream.
 */

import { acknowledgeAlert } from "./actions.js";
import { readConsoleConfig } from "./config.js";
import { HubClient } from "./hubClient.js";
import {
  renderAlertFeed,
  renderDigests,
  renderStatusBadge,
  renderToast,
} from "./render.js";
import { ConsoleStore } from "./store.js";

const TOAST_VISIBLE_MS = 4000;

function requireElement(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing page element #${id}`);
  return el;
}

function start(): void {
  const config = readConsoleConfig(window.location.search, window.localStorage);
  const client = new HubClient({ baseUrl: config.hubUrl, token: config.token });
  const store = new ConsoleStore();

  const feedEl = requireElement("alert-feed");
  const digestsEl = requireElement("digest-feed");
  const statusEl = requireElement("connection");
  const toastEl = requireElement("toast");
  const caregiverEl = requireElement("caregiver");
  caregiverEl.textContent = config.caregiverId;

  let toastTimer: number | undefined;
  const redraw = (): void => {
    feedEl.innerHTML = renderAlertFeed(store.alertViews(), store.connection());
    digestsEl.innerHTML = renderDigests(store.digestGroups());
    statusEl.innerHTML = renderStatusBadge(store.connection());
    toastEl.innerHTML = renderToast(store.lastError());
    if (store.lastError() !== null && toastTimer === undefined) {
      toastTimer = window.setTimeout(() => {
        toastTimer = undefined;
        store.clearError();
      }, TOAST_VISIBLE_MS);
    }
  };
  store.subscribe(redraw);
  redraw();

  feedEl.addEventListener("click", (event) => {
    const target = event.target as HTMLElement | null;
    const alertId = target?.dataset?.ack;
    if (!alertId) return;
    void acknowledgeAlert(store, client, alertId, config.caregiverId);
  });

  const controller = new AbortController();
  window.addEventListener("beforeunload", () => controller.abort());
  void client
    .stream({
      signal: controller.signal,
      after: store.cursor(),
      kinds: ["AlertRaised", "AlertCleared", "CaregiverAck", "TextMessage"],
      onRecord: (record) => store.apply(record),
      onStatus: (state) => store.setConnection(state),
    })
    .catch((error: unknown) => {
      store.pushError(error instanceof Error ? error.message : String(error));
      store.setConnection("reconnecting");
    });
}

start();
