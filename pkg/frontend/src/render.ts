// DOM rendering. Pure projection of UiState onto containers; user
// actions are reported through the Actions callbacks, never performed
// here. Scores come verbatim from the service.

import type { UiState } from "./store.js";
import type { FeedEvent, Prompt } from "./types.js";

export interface Actions {
  submitName(pendingId: string, name: string): void;
  dismissPrompt(pendingId: string): void;
}

/** Map a score in [-1, 1] to a bar width percentage. */
export function scoreToPercent(score: number): number {
  const clamped = Math.max(-1, Math.min(1, score));
  return ((clamped + 1) / 2) * 100;
}

function scoreBar(name: string, score: number, highlight: boolean): HTMLElement {
  const row = el("div", "score-row" + (highlight ? " argmax" : ""));
  row.dataset.speaker = name;
  const label = el("span", "score-name");
  label.textContent = name;
  const track = el("div", "score-track");
  const zero = el("div", "score-zero"); // marks the 0 decision threshold
  const fill = el("div", "score-fill" + (score >= 0 ? " positive" : " negative"));
  fill.style.width = `${scoreToPercent(score)}%`;
  track.append(zero, fill);
  const value = el("span", "score-value");
  value.textContent = score.toFixed(3);
  row.append(label, track, value);
  return row;
}

function feedRow(event: FeedEvent): HTMLElement {
  const row = el("article", `feed-row ${event.type} ${event.decision ?? ""}`);
  row.dataset.seq = String(event.seq);
  const head = el("header");
  if (event.type === "identification") {
    head.textContent =
      event.decision === "known"
        ? `known: ${event.speaker}`
        : "unknown speaker";
  } else {
    head.textContent = `enrolled: ${event.speaker} (entries: ${event.entry_count})`;
  }
  row.append(head);
  if (event.scores) {
    for (const [name, score] of Object.entries(event.scores)) {
      row.append(scoreBar(name, score, name === event.speaker));
    }
  }
  return row;
}

function promptCard(prompt: Prompt, actions: Actions): HTMLElement {
  const card = el("section", "prompt-card");
  card.dataset.pendingId = prompt.pendingId;
  const title = el("p");
  title.textContent = "Unknown speaker — enter a name to enroll:";
  const input = el("input") as HTMLInputElement;
  input.type = "text";
  input.className = "prompt-name";
  const validation = el("p", "validation");
  const submit = el("button", "prompt-submit") as HTMLButtonElement;
  submit.textContent = "Enroll";
  submit.onclick = () => {
    const name = input.value.trim();
    if (!name) {
      validation.textContent = "name must not be empty";
      return; // client-side: no request leaves the browser
    }
    validation.textContent = "";
    actions.submitName(prompt.pendingId, name);
  };
  const dismiss = el("button", "prompt-dismiss") as HTMLButtonElement;
  dismiss.textContent = "Dismiss";
  dismiss.onclick = () => actions.dismissPrompt(prompt.pendingId);
  card.append(title, input, submit, dismiss, validation);
  return card;
}

export function render(root: HTMLElement, state: UiState, actions: Actions): void {
  const status = must(root, ".status");
  status.textContent = state.status;
  status.className = `status ${state.status}`;

  const error = must(root, ".error");
  error.textContent = state.error ?? "";

  const notices = must(root, ".notices");
  notices.replaceChildren(
    ...state.notices.map((text) => {
      const note = el("p", "notice");
      note.textContent = text;
      return note;
    }),
  );

  const prompts = must(root, ".prompts");
  prompts.replaceChildren(...state.prompts.map((p) => promptCard(p, actions)));

  const feed = must(root, ".feed");
  feed.replaceChildren(...state.feed.map(feedRow));

  const speakers = must(root, ".speakers");
  speakers.replaceChildren(
    ...state.speakers.map((s) => {
      const item = el("li", "speaker");
      item.dataset.name = s.name;
      item.textContent = `${s.name} (${s.entry_count})`;
      return item;
    }),
  );
}

export function scaffold(root: HTMLElement): void {
  root.innerHTML = `
    <div class="status"></div>
    <div class="error"></div>
    <div class="notices"></div>
    <div class="prompts"></div>
    <div class="feed"></div>
    <ul class="speakers"></ul>
  `;
}

function el(tag: string, className = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  return node;
}

function must(root: HTMLElement, selector: string): HTMLElement {
  const node = root.querySelector<HTMLElement>(selector);
  if (!node) throw new Error(`missing ${selector}`);
  return node;
}
