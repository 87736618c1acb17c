/** Shared test utilities: a happy-dom setup, an in-memory Storage, DOM
 * queries, and fixture builders for the server's wire shapes. */

import { Window } from "happy-dom";
import type {
  PendingView,
  SessionSummary,
  SessionView,
  UncertaintyView,
} from "../src/api.js";
import type { StorageLike } from "../src/drafts.js";

export interface DomHandle {
  window: Window;
  root: HTMLElement;
}

/** Create a happy-dom window and expose it through the globals the view
 * layer relies on (`document` for element creation). */
export function setupDom(url = "http://localhost/index.html"): DomHandle {
  const window = new Window({ url });
  const globals = globalThis as Record<string, unknown>;
  globals.window = window;
  globals.document = window.document;
  const root = window.document.createElement("div");
  window.document.body.appendChild(root);
  return { window, root: root as unknown as HTMLElement };
}

export interface MemoryStorage extends StorageLike {
  dump(): Record<string, string>;
}

export function memoryStorage(): MemoryStorage {
  const map = new Map<string, string>();
  return {
    getItem: (key) => map.get(key) ?? null,
    setItem: (key, value) => {
      map.set(key, value);
    },
    removeItem: (key) => {
      map.delete(key);
    },
    dump: () => Object.fromEntries(map),
  };
}

export function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

/** Poll `probe` until it returns a truthy value. */
export async function waitFor<T>(
  probe: () => T | null | undefined | false,
  what: string,
  timeoutMs = 30_000,
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const value = probe();
    if (value) return value;
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await sleep(50);
  }
}

/* Queried nodes are happy-dom elements; tests treat them structurally. */
/* eslint-disable @typescript-eslint/no-explicit-any */

export function q(root: { querySelector(sel: string): unknown }, selector: string): any {
  const node = root.querySelector(selector);
  if (!node) throw new Error(`missing element ${selector}`);
  return node;
}

export function maybeQ(root: { querySelector(sel: string): unknown }, selector: string): any {
  return root.querySelector(selector);
}

export function qAll(root: { querySelectorAll(sel: string): unknown }, selector: string): any[] {
  return Array.from(root.querySelectorAll(selector) as Iterable<unknown>) as any[];
}

export function fire(window: Window, element: any, type: string): void {
  element.dispatchEvent(new window.Event(type, { bubbles: true }));
}

// ---------------------------------------------------------------------------
// Wire-shape fixtures
// ---------------------------------------------------------------------------

export function summaryFixture(overrides: Partial<SessionSummary> = {}): SessionSummary {
  return {
    id: "s0001",
    dataset: "mock5",
    status: "awaiting_annotation",
    round: 1,
    budgetK: 2,
    strategy: "adaptive",
    metric: "entropy",
    ...overrides,
  };
}

export function pendingFixture(overrides: Partial<PendingView> = {}): PendingView {
  return {
    round: 1,
    question: { id: "q01", text: "What is 1 + 1?", kind: "numeric", choices: null },
    samples: [
      {
        answer: { canonical: "2", valid: true },
        count: 2,
        raws: ["The answer is 2.", "So the answer is 2."],
      },
      { answer: { canonical: "3", valid: true }, count: 1, raws: ["The answer is 3."] },
      { answer: { canonical: "", valid: false }, count: 1, raws: ["I cannot tell."] },
    ],
    disagreement: 0.75,
    entropy: 1.0397,
    ...overrides,
  };
}

export function sessionViewFixture(overrides: Partial<SessionView> = {}): SessionView {
  return {
    ...summaryFixture(),
    poolSize: 50,
    progress: [],
    pending: pendingFixture(),
    error: null,
    ...overrides,
  };
}

export function uncertaintyFixture(overrides: Partial<UncertaintyView> = {}): UncertaintyView {
  return {
    round: 1,
    metric: "entropy",
    selectedId: "q01",
    tieBreakApplied: false,
    scored: [
      { questionId: "q01", disagreement: 1.0, entropy: 1.386 },
      { questionId: "q02", disagreement: 0.5, entropy: 0.562 },
      { questionId: "q03", disagreement: 0.25, entropy: 0.32 },
    ],
    ...overrides,
  };
}
