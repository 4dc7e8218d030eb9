// Controller: wires the store, the API client, the event stream and the
// DOM together. createApp() is also the test entry point — tests inject
// a fake EventSource factory and mock fetch.

import {
  ApiError,
  enrollPending,
  fetchSpeakers,
  identifyClip,
} from "./api.js";
import { wavDurationSeconds } from "./audio.js";
import { connectEvents, type EventSourceFactory, type StreamHandle } from "./events.js";
import { render, scaffold, type Actions } from "./render.js";
import {
  addNotice,
  applyEvent,
  removePrompt,
  setError,
  setSpeakers,
  setStatus,
  Store,
} from "./store.js";

export interface AppOptions {
  cropSeconds?: number;
  eventSourceFactory?: EventSourceFactory;
  retryMs?: number;
}

export interface App {
  store: Store;
  stream: StreamHandle;
  submitName(pendingId: string, name: string): Promise<void>;
  submitClip(wav: ArrayBuffer): Promise<void>;
  refreshSpeakers(): Promise<void>;
  close(): void;
}

export function createApp(root: HTMLElement, options: AppOptions = {}): App {
  const crop = options.cropSeconds ?? 0.5;
  const store = new Store();
  const actions: Actions = {
    submitName: (pendingId, name) => void app.submitName(pendingId, name),
    dismissPrompt: (pendingId) =>
      store.update((s) => removePrompt(s, pendingId)),
  };

  scaffold(root);
  store.subscribe((state) => render(root, state, actions));

  const stream = connectEvents(
    {
      onEvent: (event) => store.update((s) => applyEvent(s, event)),
      onStatus: (status) => store.update((s) => setStatus(s, status)),
    },
    0,
    options.eventSourceFactory,
    options.retryMs,
  );

  const app: App = {
    store,
    stream,

    async refreshSpeakers() {
      try {
        const speakers = await fetchSpeakers();
        store.update((s) => setSpeakers(s, speakers));
      } catch (err) {
        store.update((s) => setError(s, describe(err)));
      }
    },

    async submitName(pendingId, name) {
      try {
        await enrollPending(name, pendingId);
        store.update((s) => removePrompt(s, pendingId));
        await app.refreshSpeakers();
      } catch (err) {
        if (err instanceof ApiError && err.status === 404) {
          // pending entry expired server-side: clear the prompt, tell the user
          store.update((s) =>
            addNotice(removePrompt(s, pendingId), "enrollment window expired"),
          );
        } else {
          store.update((s) => setError(s, describe(err)));
        }
      }
    },

    async submitClip(wav) {
      let duration: number;
      try {
        duration = wavDurationSeconds(wav);
      } catch (err) {
        store.update((s) => setError(s, describe(err)));
        return;
      }
      if (duration < crop) {
        store.update((s) =>
          setError(s, `clip is ${duration.toFixed(2)} s; need at least ${crop} s`),
        );
        return; // rejected client-side, nothing uploaded
      }
      try {
        await identifyClip(wav, crop);
        store.update((s) => setError(s, null));
        // the feed row arrives through the event stream
      } catch (err) {
        store.update((s) => setError(s, describe(err)));
      }
    },

    close() {
      stream.close();
    },
  };

  void app.refreshSpeakers();
  return app;
}

function describe(err: unknown): string {
  return err instanceof Error ? err.message : String(err);
}
