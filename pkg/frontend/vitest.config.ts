import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "node",
    // the flow tests spawn the real session service and replay scripts
    // through its CLI, so give them room
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
