import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["test/**/*.test.ts"],
    environment: "node",
    // The round-trip suite boots a real hub process, so hooks and tests
    // get generous deadlines; unit tests finish in milliseconds anyway.
    testTimeout: 30_000,
    hookTimeout: 30_000,
  },
});
