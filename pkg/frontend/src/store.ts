// Single state store. Every mutation goes through update() so renders
// happen atomically per change; decisions and scores are stored verbatim
// from the service, never recomputed here.

import type {
  ConnectionStatus,
  FeedEvent,
  Prompt,
  SpeakerInfo,
} from "./types.js";

export const FEED_LIMIT = 200;

export interface UiState {
  speakers: SpeakerInfo[];
  feed: FeedEvent[]; // newest first
  prompts: Prompt[];
  notices: string[];
  status: ConnectionStatus;
  lastSeq: number;
  error: string | null;
}

export function initialState(): UiState {
  return {
    speakers: [],
    feed: [],
    prompts: [],
    notices: [],
    status: "connecting",
    lastSeq: 0,
    error: null,
  };
}

export type Listener = (state: UiState) => void;

export class Store {
  private state: UiState = initialState();
  private listeners: Listener[] = [];

  get(): UiState {
    return this.state;
  }

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  update(fn: (state: UiState) => UiState): void {
    this.state = fn(this.state);
    for (const listener of this.listeners) listener(this.state);
  }
}

/** Fold a stream event into the state; duplicates (seq already seen) are
 * dropped so replays after reconnect render once. */
export function applyEvent(state: UiState, event: FeedEvent): UiState {
  if (event.seq <= state.lastSeq) return state;
  const feed = [event, ...state.feed].slice(0, FEED_LIMIT);
  let prompts = state.prompts;
  if (
    event.type === "identification" &&
    event.decision === "unknown" &&
    event.pending_id
  ) {
    prompts = [
      ...prompts,
      { pendingId: event.pending_id, scores: event.scores ?? {}, seq: event.seq },
    ];
  }
  return { ...state, feed, prompts, lastSeq: event.seq };
}

export function removePrompt(state: UiState, pendingId: string): UiState {
  return {
    ...state,
    prompts: state.prompts.filter((p) => p.pendingId !== pendingId),
  };
}

export function addNotice(state: UiState, notice: string): UiState {
  return { ...state, notices: [...state.notices, notice] };
}

export function setSpeakers(state: UiState, speakers: SpeakerInfo[]): UiState {
  return { ...state, speakers };
}

export function setStatus(state: UiState, status: ConnectionStatus): UiState {
  return { ...state, status };
}

export function setError(state: UiState, error: string | null): UiState {
  return { ...state, error };
}
