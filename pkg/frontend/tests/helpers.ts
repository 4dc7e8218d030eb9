// Shared fakes: a controllable EventSource and a scripted fetch mock.

import { vi } from "vitest";
import type { EventSourceLike } from "../src/events.js";
import type { FeedEvent } from "../src/types.js";

export class FakeEventSource implements EventSourceLike {
  onmessage: ((ev: MessageEvent) => void) | null = null;
  onerror: ((ev: Event) => void) | null = null;
  onopen: ((ev: Event) => void) | null = null;
  readyState = 0;
  closed = false;

  constructor(readonly url: string) {}

  open(): void {
    this.readyState = 1;
    this.onopen?.(new Event("open"));
  }

  emit(event: FeedEvent): void {
    this.onmessage?.(new MessageEvent("message", { data: JSON.stringify(event) }));
  }

  fail(terminal = false): void {
    if (terminal) this.readyState = 2;
    this.onerror?.(new Event("error"));
  }

  close(): void {
    this.closed = true;
  }
}

export class FakeStream {
  instances: FakeEventSource[] = [];
  factory = (url: string): EventSourceLike => {
    const source = new FakeEventSource(url);
    this.instances.push(source);
    return source;
  };
  get current(): FakeEventSource {
    return this.instances[this.instances.length - 1];
  }
}

export interface Route {
  method: string;
  path: string;
  status: number;
  body: unknown;
}

/** Install a fetch mock answering from a route table; records every call. */
export function mockFetch(routes: Route[]): { calls: Array<{ url: string; init?: RequestInit }> } {
  const calls: Array<{ url: string; init?: RequestInit }> = [];
  const remaining = [...routes];
  vi.stubGlobal("fetch", async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    const method = init?.method ?? "GET";
    const idx = remaining.findIndex(
      (r) => r.method === method && url.split("?")[0] === r.path,
    );
    if (idx < 0) throw new Error(`no route for ${method} ${url}`);
    // duplicate routes answer in order, so a refresh can see new data
    const route =
      remaining.filter((r) => r.method === method && r.path === remaining[idx].path)
        .length > 1
        ? remaining.splice(idx, 1)[0]
        : remaining[idx];
    return new Response(JSON.stringify(route.body), {
      status: route.status,
      headers: { "content-type": "application/json" },
    });
  });
  return { calls };
}

export function identification(
  seq: number,
  decision: "known" | "unknown",
  scores: Record<string, number>,
  extra: Partial<FeedEvent> = {},
): FeedEvent {
  const speakers = Object.entries(scores);
  const best = speakers.reduce((a, b) => (b[1] > a[1] ? b : a), speakers[0]);
  return {
    seq,
    timestamp: "2026-01-01T00:00:00+00:00",
    type: "identification",
    decision,
    speaker: decision === "known" ? best[0] : null,
    scores,
    ...extra,
  };
}

export async function flush(): Promise<void> {
  await new Promise((resolve) => setTimeout(resolve, 0));
}
