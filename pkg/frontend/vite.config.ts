import { defineConfig } from "vitest/config";

// Built assets are served by the labeling server under /ui; in dev, API
// and websocket traffic proxies to a locally running backend.
export default defineConfig({
  base: "/ui/",
  build: { outDir: "dist" },
  server: {
    proxy: {
      "/api": "http://localhost:8080",
      "/images": "http://localhost:8080",
      "/thumbs": "http://localhost:8080",
      "/ws": { target: "ws://localhost:8080", ws: true },
    },
  },
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
  },
});
