import { defineConfig } from "vitest/config";

// Dev server proxies API calls to a locally running `wheelsim run --serve`;
// the production build is served by that same process from frontend/dist.
export default defineConfig({
  server: {
    proxy: {
      "/api": {
        target: "http://127.0.0.1:8000",
        ws: true,
      },
      "/update": "http://127.0.0.1:8000",
    },
  },
  build: {
    target: "es2022",
  },
  test: {
    environment: "node",
  },
});
