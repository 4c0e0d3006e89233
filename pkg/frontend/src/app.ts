// Shared application context: server-backed state plus transient UI state.
// The session view never diverges from the last server response except for
// explicitly-unsaved form edits (tracked per screen).

import { ApiError, PillarApi } from './api';
import { createStore, Store } from './store';
import type { ProblemDetails, SessionResource } from './types';

export type ScreenId =
  | 'profile'
  | 'dfd'
  | 'threat-model'
  | 'linddun-go'
  | 'linddun-pro'
  | 'assessment'
  | 'report';

export interface AppState {
  sessionId: string | null;
  session: SessionResource | null;
  screen: ScreenId;
  busy: string | null;
  error: ProblemDetails | null;
  unsaved: boolean;
  /** bumped when a retry should re-run the last failed action */
  retryToken: number;
}

export interface AppContext {
  api: PillarApi;
  store: Store<AppState>;
  /** re-fetch the session resource from the server */
  reload(): Promise<void>;
  /** run one mutation; enforces a single in-flight mutation per session */
  run<T>(label: string, action: (signal: AbortSignal) => Promise<T>): Promise<T | undefined>;
  cancel(): void;
}

export function createApp(api: PillarApi): AppContext {
  const store = createStore<AppState>({
    sessionId: null,
    session: null,
    screen: 'profile',
    busy: null,
    error: null,
    unsaved: false,
    retryToken: 0,
  });

  let controller: AbortController | null = null;

  async function reload(): Promise<void> {
    const { sessionId } = store.get();
    if (!sessionId) return;
    const session = await api.getSession(sessionId);
    store.set({ session });
  }

  async function run<T>(
    label: string,
    action: (signal: AbortSignal) => Promise<T>,
  ): Promise<T | undefined> {
    if (store.get().busy) {
      return undefined;
    }
    controller = new AbortController();
    store.set({ busy: label, error: null });
    try {
      const result = await action(controller.signal);
      await reload();
      return result;
    } catch (error) {
      if (error instanceof ApiError) {
        store.set({ error: error.problem });
      } else if ((error as Error).name === 'AbortError') {
        store.set({ error: { code: 'CANCELED', message: `${label} canceled`, detail: null } });
      } else {
        store.set({ error: { code: 'UNEXPECTED', message: String(error), detail: null } });
      }
      return undefined;
    } finally {
      controller = null;
      store.set({ busy: null });
    }
  }

  function cancel(): void {
    controller?.abort();
  }

  return { api, store, reload, run, cancel };
}

export async function openSession(app: AppContext, appName = 'Untitled analysis'):
    Promise<void> {
  const hash = typeof location !== 'undefined' ? location.hash.replace(/^#/, '') : '';
  if (hash) {
    try {
      const session = await app.api.getSession(hash);
      app.store.set({ sessionId: session.id, session });
      return;
    } catch {
      // stale hash; fall through to list/create
    }
  }
  const existing = await app.api.listSessions();
  const session = existing.length > 0
    ? await app.api.getSession(existing[0].id)
    : await app.api.createSession(appName);
  if (typeof location !== 'undefined') {
    location.hash = session.id;
  }
  app.store.set({ sessionId: session.id, session });
}
