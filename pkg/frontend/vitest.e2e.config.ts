import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    // the console is served from the API's own origin in production, so the
    // e2e window carries that origin too
    environmentOptions: { happyDOM: { url: "http://127.0.0.1:8799/" } },
    include: ["e2e/**/*.test.ts"],
    globalSetup: ["e2e/setup.ts"],
    testTimeout: 30000,
    hookTimeout: 60000,
    fileParallelism: false,
  },
});
