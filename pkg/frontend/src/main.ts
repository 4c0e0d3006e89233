import { PillarApi } from './api';
import { createApp, openSession } from './app';
import { renderWizard } from './wizard';

export function bootstrap(root: HTMLElement, baseUrl = ''): ReturnType<typeof createApp> {
  const api = new PillarApi(baseUrl);
  const app = createApp(api);
  renderWizard(root, app);
  void openSession(app).catch((error) => {
    app.store.set({
      error: { code: 'CONNECT', message: `cannot reach the service: ${error}`, detail: null },
    });
  });
  return app;
}

if (typeof document !== 'undefined' && document.getElementById('app')) {
  const params = new URLSearchParams(location.search);
  bootstrap(document.getElementById('app')!, params.get('api') ?? '');
}
