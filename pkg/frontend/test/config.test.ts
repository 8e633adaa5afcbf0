import { describe, expect, it } from "vitest";

import {
  DEFAULT_CAREGIVER_ID,
  DEFAULT_HUB_URL,
  readConsoleConfig,
} from "../src/config.js";

function memoryStorage(initial?: Record<string, string>) {
  const data = new Map(Object.entries(initial ?? {}));
  return {
    getItem: (key: string) => data.get(key) ?? null,
    setItem: (key: string, value: string) => void data.set(key, value),
    data,
  };
}

describe("console config", () => {
  it("falls back to defaults with nothing stored", () => {
    const config = readConsoleConfig("", memoryStorage());
    expect(config.hubUrl).toBe(DEFAULT_HUB_URL);
    expect(config.token).toBeUndefined();
    expect(config.caregiverId).toBe(DEFAULT_CAREGIVER_ID);
  });

  it("reads query parameters and persists them", () => {
    const storage = memoryStorage();
    const config = readConsoleConfig(
      "?hub=http://10.0.0.5:9000&token=tok&caregiver=dana",
      storage,
    );
    expect(config).toEqual({
      hubUrl: "http://10.0.0.5:9000",
      token: "tok",
      caregiverId: "dana",
    });
    expect(storage.data.get("console.hubUrl")).toBe("http://10.0.0.5:9000");
    expect(storage.data.get("console.token")).toBe("tok");
    expect(storage.data.get("console.caregiverId")).toBe("dana");
  });

  it("prefers stored values over defaults once the query is gone", () => {
    const storage = memoryStorage({
      "console.hubUrl": "http://10.0.0.5:9000",
      "console.token": "tok",
    });
    const config = readConsoleConfig("", storage);
    expect(config.hubUrl).toBe("http://10.0.0.5:9000");
    expect(config.token).toBe("tok");
    expect(config.caregiverId).toBe(DEFAULT_CAREGIVER_ID);
  });

  it("lets fresh query values overwrite stored ones", () => {
    const storage = memoryStorage({ "console.hubUrl": "http://old:1" });
    const config = readConsoleConfig("?hub=http://new:2", storage);
    expect(config.hubUrl).toBe("http://new:2");
    expect(storage.data.get("console.hubUrl")).toBe("http://new:2");
  });

  it("works without any storage at all", () => {
    const config = readConsoleConfig("?caregiver=kim", null);
    expect(config.caregiverId).toBe("kim");
    expect(config.hubUrl).toBe(DEFAULT_HUB_URL);
  });
});
