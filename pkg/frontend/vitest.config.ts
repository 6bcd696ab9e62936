import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    testTimeout: 120_000,
    hookTimeout: 180_000,
    // the e2e file owns one shared server; keep files sequential
    fileParallelism: false,
  },
});
