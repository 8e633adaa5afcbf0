/**
 * Acknowledge is the console's only write path to the hub.
 *
 * The flow is optimistic: the row flips to AckPending before the call,
 * and the durable Acknowledged state arrives later as AlertCleared on
 * the stream. A NotFound reply rolls the row back into a visible stale
 * state; any other failure rolls back to the previous state. Both leave
 * an error toast behind.
 */

import { AlertNotFoundError, HubClient } from "./hubClient.js";
import type { ConsoleStore } from "./store.js";

export async function acknowledgeAlert(
  store: ConsoleStore,
  client: HubClient,
  alertId: string,
  caregiverId: string,
): Promise<boolean> {
  if (!store.beginAck(alertId)) return false;
  try {
    await client.acknowledge(alertId, caregiverId);
    store.ackDelivered(alertId);
    return true;
  } catch (error) {
    store.ackFailed(alertId, { notFound: error instanceof AlertNotFoundError });
    return false;
  }
}
