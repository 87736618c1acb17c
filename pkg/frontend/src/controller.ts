/** Application controller: owns the UI state, talks to the service through
 * the API client, and re-renders the active screen.
 *
 * State changes flow one way: server fetch → state → render. The only
 * mutations ever sent to the service are session creation and annotation
 * commits; everything else is a read. Commits are idempotent server-side, so
 * concurrent tabs at worst re-post the same annotation.
 */

import {
  ApiClient,
  ApiError,
  type SessionConfigInput,
  type SessionSummary,
  type SessionView,
  type UncertaintyView,
} from "./api.js";
import { DraftStore, type Draft, type StorageLike } from "./drafts.js";
import { startPolling, type PollHandle, type PollOptions } from "./poll.js";
import {
  canSubmit,
  statusLabel,
  validateAnswer,
  type ScoreSort,
  type ScoreSortKey,
} from "./format.js";
import {
  el,
  renderAnnotation,
  renderDashboard,
  renderProgress,
  renderRescoring,
} from "./views.js";

export interface WindowLike {
  location: { hash: string };
  addEventListener(type: string, listener: () => void): void;
}

export interface AppOptions {
  poll?: PollOptions;
  window?: WindowLike;
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return `${error.code}: ${error.message}`;
  return String(error);
}

export class AnnotatorApp {
  private screen: "dashboard" | "session" = "dashboard";

  // Dashboard state.
  private sessions: SessionSummary[] = [];
  private apiDown: string | null = null;
  private formError: string | null = null;

  // Session-screen state.
  private sessionId: string | null = null;
  private view: SessionView | null = null;
  private uncertainty: UncertaintyView | null = null;
  private draft: Draft = { rationale: "", answer: "" };
  private draftQuestionId: string | null = null;
  private annotatorId: string;
  private busy = false;
  private submitError: string | null = null;
  private warnings: string[] = [];
  private sort: ScoreSort | null = null;

  private poller: PollHandle | null = null;
  private polling = false;
  private readonly drafts: DraftStore;
  private readonly win: WindowLike;

  constructor(
    private readonly api: ApiClient,
    private readonly root: HTMLElement,
    storage: StorageLike,
    private readonly options: AppOptions = {},
  ) {
    this.drafts = new DraftStore(storage);
    this.annotatorId = this.drafts.loadAnnotatorId();
    this.win =
      options.window ?? (globalThis as unknown as { window: WindowLike }).window;
  }

  start(): void {
    this.win.addEventListener("hashchange", () => {
      void this.route();
    });
    void this.route();
  }

  async route(): Promise<void> {
    const match = /^#\/session\/([^/]+)/.exec(this.win.location.hash);
    if (match) {
      const id = decodeURIComponent(match[1]);
      if (this.screen === "session" && this.sessionId === id) return;
      await this.openSession(id);
    } else {
      await this.showDashboard();
    }
  }

  // -------------------------------------------------------------------------
  // Dashboard
  // -------------------------------------------------------------------------

  async showDashboard(): Promise<void> {
    this.stopPolling();
    this.screen = "dashboard";
    this.sessionId = null;
    this.view = null;
    this.render();
    await this.refreshDashboard();
  }

  async refreshDashboard(): Promise<void> {
    try {
      this.sessions = await this.api.listSessions();
      this.apiDown = null;
    } catch (error) {
      this.apiDown = describe(error);
    }
    this.render();
  }

  async createSession(dataset: string, config: SessionConfigInput): Promise<string | null> {
    try {
      const id = await this.api.createSession(dataset, config);
      this.formError = null;
      this.win.location.hash = `#/session/${encodeURIComponent(id)}`;
      await this.openSession(id);
      return id;
    } catch (error) {
      this.formError = describe(error);
      this.render();
      return null;
    }
  }

  // -------------------------------------------------------------------------
  // Session screen
  // -------------------------------------------------------------------------

  async openSession(id: string): Promise<void> {
    this.stopPolling();
    this.screen = "session";
    this.sessionId = id;
    this.view = null;
    this.uncertainty = null;
    this.draft = { rationale: "", answer: "" };
    this.draftQuestionId = null;
    this.busy = false;
    this.submitError = null;
    this.warnings = [];
    this.sort = null;
    this.apiDown = null;
    this.render();
    try {
      await this.refreshSession();
    } catch {
      // The banner is already rendered; polling below will retry.
    }
    this.ensurePolling();
  }

  /** Poll tick: fetch the session view (and scores when available), then
   * re-render. Returns whether polling should continue. */
  async refreshSession(): Promise<boolean> {
    const id = this.sessionId;
    if (id === null || this.screen !== "session") return false;
    try {
      const view = await this.api.getSession(id);
      let uncertainty: UncertaintyView | null = null;
      try {
        uncertainty = await this.api.getUncertainty(id);
      } catch (error) {
        if (!(error instanceof ApiError && error.status === 409)) throw error;
      }
      if (this.sessionId !== id || this.screen !== "session") return false;
      this.view = view;
      this.uncertainty = uncertainty;
      this.apiDown = null;
      if (this.sort === null && uncertainty !== null) {
        const key: ScoreSortKey =
          uncertainty.metric === "disagreement" ? "disagreement" : "entropy";
        this.sort = { key, descending: true };
      }
      if (!this.busy) this.reconcileDraft();
      this.render();
      return this.shouldPoll();
    } catch (error) {
      if (this.sessionId === id && this.screen === "session") {
        this.apiDown = describe(error);
        this.render();
      }
      throw error;
    }
  }

  /** Align the local draft with the question the server reports as pending.
   * A new pending question loads that round's stored draft (or a blank one);
   * an unchanged question leaves the in-progress text alone.
   */
  private reconcileDraft(): void {
    const pending = this.view?.pending ?? null;
    if (pending === null || this.sessionId === null) {
      this.draftQuestionId = null;
      return;
    }
    if (this.draftQuestionId === pending.question.id) return;
    const stored = this.drafts.load(this.sessionId, pending.round);
    this.draft = stored ?? { rationale: "", answer: "" };
    this.draftQuestionId = pending.question.id;
    this.submitError = null;
  }

  changeDraft(patch: Partial<Draft>): void {
    const pending = this.view?.pending;
    if (!pending || this.sessionId === null) return;
    this.draft = { ...this.draft, ...patch };
    this.draftQuestionId = pending.question.id;
    this.drafts.save(this.sessionId, pending.round, this.draft);
    this.syncFormState();
  }

  changeAnnotator(annotatorId: string): void {
    this.annotatorId = annotatorId;
    this.drafts.saveAnnotatorId(annotatorId);
    this.syncFormState();
  }

  /** Update the submit button in place after a keystroke; a full re-render
   * would drop focus from the field being typed in. */
  private syncFormState(): void {
    const pending = this.view?.pending;
    if (!pending) return;
    const validation = validateAnswer(
      pending.question.kind,
      pending.question.choices,
      this.draft.answer,
    );
    const enabled =
      !this.busy &&
      canSubmit(this.draft.rationale, validation, this.draftQuestionId, pending.question.id) &&
      this.annotatorId.trim().length > 0;
    const button = this.root.querySelector('[data-role="submit"]');
    if (button !== null) {
      if (enabled) {
        button.removeAttribute("disabled");
      } else {
        button.setAttribute("disabled", "");
      }
    }
  }

  async submit(): Promise<void> {
    const id = this.sessionId;
    const pending = this.view?.pending;
    if (id === null || !pending || this.busy || this.draftQuestionId === null) return;
    const round = pending.round;
    this.busy = true;
    this.submitError = null;
    this.warnings = [];
    this.render();
    try {
      const result = await this.api.postAnnotation(id, {
        questionId: this.draftQuestionId,
        rationale: this.draft.rationale,
        answer: this.draft.answer,
        annotatorId: this.annotatorId.trim(),
      });
      // Only a confirmed commit clears the draft.
      this.warnings = result.warnings;
      this.drafts.clear(id, round);
      this.draft = { rationale: "", answer: "" };
      this.draftQuestionId = null;
      this.busy = false;
      try {
        await this.refreshSession();
      } catch {
        // Banner shown; polling keeps retrying.
      }
      this.ensurePolling();
    } catch (error) {
      // Rejected (stale question, unparseable answer, …): surface the error
      // inline and keep the draft for correction.
      this.busy = false;
      this.submitError = describe(error);
      this.render();
    }
  }

  changeSort(key: ScoreSortKey): void {
    const current = this.sort ?? { key: "entropy" as ScoreSortKey, descending: true };
    this.sort =
      current.key === key
        ? { key, descending: !current.descending }
        : { key, descending: key !== "questionId" };
    this.render();
  }

  // -------------------------------------------------------------------------
  // Polling
  // -------------------------------------------------------------------------

  private shouldPoll(): boolean {
    return (
      this.screen === "session" &&
      this.view !== null &&
      (this.view.status === "awaiting_scores" || this.view.status === "awaiting_annotation")
    );
  }

  private ensurePolling(): void {
    if (this.polling) return;
    if (this.view !== null && !this.shouldPoll()) return;
    this.polling = true;
    this.poller = startPolling(async () => {
      const again = await this.refreshSession();
      if (!again) this.polling = false;
      return again;
    }, this.options.poll);
  }

  private stopPolling(): void {
    this.poller?.stop();
    this.poller = null;
    this.polling = false;
  }

  // -------------------------------------------------------------------------
  // Rendering
  // -------------------------------------------------------------------------

  private setContent(node: HTMLElement): void {
    this.root.innerHTML = "";
    this.root.append(node);
  }

  private lastFingerprint: string | null = null;

  /** Everything the DOM is built from except the text being typed. Draft and
   * annotator edits deliberately stay out: they originate in the DOM, and
   * rebuilding the tree on every keystroke (or on a poll tick that found
   * nothing new) would throw away the user's focus. Those fields sync the
   * submit button in place instead. */
  private fingerprint(): string {
    if (this.screen === "dashboard") {
      return JSON.stringify(["dashboard", this.sessions, this.apiDown, this.formError]);
    }
    return JSON.stringify([
      "session",
      this.sessionId,
      this.view,
      this.uncertainty,
      this.apiDown,
      this.draftQuestionId,
      this.busy,
      this.submitError,
      this.warnings,
      this.sort,
    ]);
  }

  private render(): void {
    const fingerprint = this.fingerprint();
    if (fingerprint === this.lastFingerprint) return;
    this.lastFingerprint = fingerprint;
    if (this.screen === "dashboard") {
      this.setContent(
        renderDashboard({
          sessions: this.sessions,
          apiDown: this.apiDown,
          formError: this.formError,
          exportUrlFor: (id) => this.api.exportUrl(id),
          onOpen: (id) => {
            this.win.location.hash = `#/session/${encodeURIComponent(id)}`;
            void this.openSession(id);
          },
          onCreate: (dataset, config) => {
            void this.createSession(dataset, config);
          },
          onRetry: () => {
            void this.refreshDashboard();
          },
        }),
      );
      return;
    }

    const container = el("div", { class: "session-screen" });
    container.append(el("p", {}, [el("a", { href: "#/", "data-role": "back" }, ["← all sessions"])]));
    if (this.apiDown !== null) {
      container.append(
        el("div", { class: "banner error", "data-role": "api-down" }, [
          `Annotation service unreachable: ${this.apiDown}`,
        ]),
      );
    }

    const view = this.view;
    if (view === null) {
      container.append(el("p", { "data-role": "loading" }, ["Loading session…"]));
      this.setContent(container);
      return;
    }

    container.append(el("h1", {}, [view.id]));
    container.append(
      el("p", { class: "session-meta", "data-role": "session-status" }, [
        `${view.dataset} · ${view.strategy} · ${view.metric} · ${statusLabel(view.status)}` +
          ` · pool ${view.poolSize}`,
      ]),
    );

    if (view.pending !== null) {
      container.append(
        renderAnnotation({
          session: view,
          pending: view.pending,
          draft: this.draft,
          draftQuestionId: this.draftQuestionId,
          annotatorId: this.annotatorId,
          busy: this.busy,
          submitError: this.submitError,
          warnings: this.warnings,
          onDraftChange: (draft) => this.changeDraft(draft),
          onAnnotatorChange: (annotatorId) => this.changeAnnotator(annotatorId),
          onSubmit: () => {
            void this.submit();
          },
        }),
      );
    } else if (view.status === "awaiting_scores") {
      container.append(renderRescoring(view));
      for (const warning of this.warnings) {
        container.append(el("p", { class: "warning", "data-role": "commit-warning" }, [warning]));
      }
    }

    container.append(
      renderProgress({
        session: view,
        uncertainty: this.uncertainty,
        sort: this.sort ?? { key: "entropy", descending: true },
        exportUrl: this.api.exportUrl(view.id),
        onSort: (key) => this.changeSort(key),
      }),
    );
    this.setContent(container);
  }

  // Test and debugging accessors; the DOM is the primary surface.

  currentView(): SessionView | null {
    return this.view;
  }

  currentDraft(): Draft {
    return { ...this.draft };
  }

  stop(): void {
    this.stopPolling();
  }
}
