/**
 * Console configuration: one hub URL, an optional client token, and the
 * caregiver id acknowledgments are signed with.
 *
 * Query parameters win and are persisted, so a bookmarked
 * `?hub=...&token=...` keeps working after the params are dropped.
 */

export interface ConsoleConfig {
  hubUrl: string;
  token: string | undefined;
  caregiverId: string;
}

interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
}

const KEYS = {
  hub: "console.hubUrl",
  token: "console.token",
  caregiver: "console.caregiverId",
} as const;

export const DEFAULT_HUB_URL = "http://127.0.0.1:8787";
export const DEFAULT_CAREGIVER_ID = "caregiver-1";

export function readConsoleConfig(
  search: string,
  storage: StorageLike | null,
): ConsoleConfig {
  const params = new URLSearchParams(search);

  const pick = (param: string, key: string): string | null => {
    const fromQuery = params.get(param);
    if (fromQuery !== null && fromQuery !== "") {
      storage?.setItem(key, fromQuery);
      return fromQuery;
    }
    return storage?.getItem(key) ?? null;
  };

  const hubUrl = pick("hub", KEYS.hub) ?? DEFAULT_HUB_URL;
  const token = pick("token", KEYS.token) ?? undefined;
  const caregiverId = pick("caregiver", KEYS.caregiver) ?? DEFAULT_CAREGIVER_ID;
  return { hubUrl, token, caregiverId };
}
