// Event stream client. The browser EventSource already replays with a
// Last-Event-ID header on its own reconnects; on top of that we track the
// last seen sequence so a fully re-created connection (after close()) can
// resume via the ?last_seen query parameter. Dedup itself happens in the
// store (applyEvent), so an overlap between replay paths is harmless.

import type { ConnectionStatus, FeedEvent } from "./types.js";

export interface EventSourceLike {
  onmessage: ((ev: MessageEvent) => void) | null;
  onerror: ((ev: Event) => void) | null;
  onopen: ((ev: Event) => void) | null;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export interface StreamHandlers {
  onEvent(event: FeedEvent): void;
  onStatus(status: ConnectionStatus): void;
}

export interface StreamHandle {
  close(): void;
  lastSeen(): number;
}

const RETRY_MS = 2000;

export function connectEvents(
  handlers: StreamHandlers,
  lastSeen = 0,
  factory: EventSourceFactory = (url) => new EventSource(url),
  retryMs = RETRY_MS,
): StreamHandle {
  let cursor = lastSeen;
  let source: EventSourceLike | null = null;
  let timer: ReturnType<typeof setTimeout> | null = null;
  let closed = false;

  function open(): void {
    if (closed) return;
    handlers.onStatus(cursor === 0 && source === null ? "connecting" : "reconnecting");
    source = factory(`/api/events?last_seen=${cursor}`);
    source.onopen = () => handlers.onStatus("open");
    source.onmessage = (ev) => {
      const event = JSON.parse(ev.data) as FeedEvent;
      if (event.seq > cursor) cursor = event.seq;
      handlers.onEvent(event);
    };
    source.onerror = () => {
      // let the browser retry in place; if the source is dead, rebuild it
      handlers.onStatus("reconnecting");
      if (source && (source as EventSource).readyState === 2 /* CLOSED */) {
        source.close();
        source = null;
        timer = setTimeout(open, retryMs);
      }
    };
  }

  open();
  return {
    close() {
      closed = true;
      if (timer !== null) clearTimeout(timer);
      source?.close();
    },
    lastSeen: () => cursor,
  };
}
