import { defineConfig } from 'vite';

// The dev server proxies API calls to the local PILLAR service so the app
// works same-origin; set PILLAR_API_URL to point somewhere else.
const apiTarget = process.env.PILLAR_API_URL ?? 'http://127.0.0.1:8977';

export default defineConfig({
  server: {
    proxy: {
      '/sessions': { target: apiTarget, changeOrigin: true },
    },
  },
  test: {
    environment: 'node',
  },
});
