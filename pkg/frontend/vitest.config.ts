import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    testTimeout: 120_000,
    hookTimeout: 120_000,
    // the end-to-end test drives a live service; keep runs serial so
    // one child process at a time owns its port
    fileParallelism: false,
  },
});
