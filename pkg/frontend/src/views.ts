/** DOM rendering for the three screens: session dashboard, annotation
 * screen, and the progress & export view.
 *
 * Render functions are pure with respect to the app: they take a props
 * object (server state plus callbacks) and return a detached element tree.
 * All numbers shown come straight from the server.
 */

import type {
  PendingView,
  ProgressRow,
  SessionConfigInput,
  SessionSummary,
  SessionView,
  UncertaintyView,
} from "./api.js";
import type { Draft } from "./drafts.js";
import {
  canSubmit,
  formatScore,
  roundLabel,
  sortScored,
  statusLabel,
  validateAnswer,
  type ScoreSort,
  type ScoreSortKey,
} from "./format.js";

type Child = Node | string;

/** Create an element with attributes and children. */
export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: Child[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    if (name === "class") {
      node.className = value;
    } else {
      node.setAttribute(name, value);
    }
  }
  for (const child of children) {
    if (typeof child === "string") {
      node.append(document.createTextNode(child));
    } else {
      node.append(child);
    }
  }
  return node;
}

// ---------------------------------------------------------------------------
// Session dashboard
// ---------------------------------------------------------------------------

export interface DashboardProps {
  sessions: SessionSummary[];
  /** Message shown in the service-down banner; null hides the banner. */
  apiDown: string | null;
  /** Inline error from the last create attempt (e.g. budget exceeds pool). */
  formError: string | null;
  exportUrlFor(id: string): string;
  onOpen(id: string): void;
  onCreate(dataset: string, config: SessionConfigInput): void;
  onRetry(): void;
}

const STRATEGIES = ["adaptive", "active", "random", "auto-cot"];
const METRICS = ["entropy", "disagreement"];

export function renderDashboard(props: DashboardProps): HTMLElement {
  const root = el("div", { class: "dashboard" });
  root.append(el("h1", {}, ["Annotation sessions"]));

  if (props.apiDown !== null) {
    const retry = el("button", { type: "button", "data-role": "retry" }, ["Retry"]);
    retry.addEventListener("click", () => props.onRetry());
    root.append(
      el("div", { class: "banner error", "data-role": "api-down" }, [
        `Annotation service unreachable: ${props.apiDown} `,
        retry,
      ]),
    );
  }

  root.append(renderCreateForm(props));
  root.append(renderSessionList(props));
  return root;
}

function renderCreateForm(props: DashboardProps): HTMLElement {
  const dataset = el("input", {
    "data-role": "dataset",
    placeholder: "dataset name (e.g. mock5)",
  });
  const budget = el("input", { "data-role": "budget-k", type: "number", min: "1" });
  const samples = el("input", { "data-role": "samples-l", type: "number", min: "1" });
  const seed = el("input", { "data-role": "seed", type: "number", value: "0" });

  const strategy = el("select", { "data-role": "strategy" });
  for (const name of STRATEGIES) {
    strategy.append(el("option", { value: name }, [name]));
  }
  const metric = el("select", { "data-role": "metric" });
  for (const name of METRICS) {
    metric.append(el("option", { value: name }, [name]));
  }

  const submit = el("button", { type: "button", "data-role": "create" }, ["Create session"]);
  submit.addEventListener("click", () => {
    const config: SessionConfigInput = {
      strategy: strategy.value,
      metric: metric.value,
    };
    if (budget.value.trim() !== "") config.budget_k = Number(budget.value);
    if (samples.value.trim() !== "") config.samples_l = Number(samples.value);
    if (seed.value.trim() !== "") config.seed = Number(seed.value);
    props.onCreate(dataset.value.trim(), config);
  });

  const form = el("section", { class: "create-form" }, [
    el("h2", {}, ["New session"]),
    labelled("Dataset", dataset),
    labelled("Budget k (blank = dataset preset)", budget),
    labelled("Strategy", strategy),
    labelled("Metric", metric),
    labelled("Samples per question l", samples),
    labelled("Seed", seed),
    submit,
  ]);
  if (props.formError !== null) {
    form.append(el("p", { class: "error", "data-role": "form-error" }, [props.formError]));
  }
  return form;
}

function labelled(text: string, control: HTMLElement): HTMLElement {
  return el("label", { class: "field" }, [el("span", {}, [text]), control]);
}

function renderSessionList(props: DashboardProps): HTMLElement {
  const section = el("section", { class: "session-list" }, [el("h2", {}, ["Existing sessions"])]);
  if (props.sessions.length === 0) {
    section.append(el("p", { "data-role": "no-sessions" }, ["No sessions yet."]));
    return section;
  }
  const body = el("tbody");
  for (const session of props.sessions) {
    const open = el("button", { type: "button", "data-role": "open" }, ["Open"]);
    open.addEventListener("click", () => props.onOpen(session.id));
    const actions = el("td", {}, [open]);
    if (session.status === "complete") {
      actions.append(
        el(
          "a",
          {
            "data-role": "list-export",
            href: props.exportUrlFor(session.id),
            download: `${session.id}-exemplars.json`,
          },
          ["Download exemplars"],
        ),
      );
    }
    body.append(
      el("tr", { "data-role": "session-row", "data-session-id": session.id }, [
        el("td", {}, [session.id]),
        el("td", {}, [session.dataset]),
        el("td", { "data-role": "status" }, [statusLabel(session.status)]),
        el("td", {}, [roundLabel(session.round, session.budgetK)]),
        el("td", {}, [session.strategy]),
        el("td", {}, [session.metric]),
        actions,
      ]),
    );
  }
  section.append(
    el("table", {}, [
      el("thead", {}, [
        el("tr", {}, [
          el("th", {}, ["Session"]),
          el("th", {}, ["Dataset"]),
          el("th", {}, ["Status"]),
          el("th", {}, ["Round"]),
          el("th", {}, ["Strategy"]),
          el("th", {}, ["Metric"]),
          el("th", {}, ["Actions"]),
        ]),
      ]),
      body,
    ]),
  );
  return section;
}

// ---------------------------------------------------------------------------
// Annotation screen
// ---------------------------------------------------------------------------

export interface AnnotationProps {
  session: SessionView;
  pending: PendingView;
  draft: Draft;
  /** Question id the draft was written against; submission is disabled when
   * it no longer matches the server's pending question. */
  draftQuestionId: string | null;
  annotatorId: string;
  busy: boolean;
  submitError: string | null;
  warnings: string[];
  /** Edits are reported field by field and merged into the current draft by
   * the receiver; sending a whole draft here would resurrect stale sibling
   * fields captured at render time. */
  onDraftChange(patch: Partial<Draft>): void;
  onAnnotatorChange(annotatorId: string): void;
  onSubmit(): void;
}

export function renderAnnotation(props: AnnotationProps): HTMLElement {
  const { pending, draft } = props;
  const question = pending.question;

  const root = el("section", { class: "annotation", "data-role": "annotation" });
  root.append(
    el("h2", {}, [
      `Annotate ${roundLabel(pending.round, props.session.budgetK)}`,
    ]),
  );

  root.append(
    el("div", { class: "question" }, [
      el("p", { class: "question-meta" }, [`${question.id} · ${question.kind}`]),
      el("p", { "data-role": "question-text" }, [question.text]),
    ]),
  );

  root.append(
    el("p", { class: "badges" }, [
      el("span", { class: "badge", "data-role": "disagreement-badge" }, [
        `disagreement ${formatScore(pending.disagreement)}`,
      ]),
      " ",
      el("span", { class: "badge", "data-role": "entropy-badge" }, [
        `entropy ${formatScore(pending.entropy)} nats`,
      ]),
    ]),
  );

  root.append(renderSampleGroups(pending));

  const rationale = el("textarea", {
    "data-role": "rationale",
    rows: "6",
    placeholder: "Step-by-step reasoning for this question",
  });
  rationale.value = draft.rationale;
  rationale.addEventListener("input", () => {
    props.onDraftChange({ rationale: rationale.value });
  });

  const answerControl = renderAnswerControl(props);

  const annotator = el("input", { "data-role": "annotator-id", placeholder: "your name" });
  annotator.value = props.annotatorId;
  annotator.addEventListener("input", () => props.onAnnotatorChange(annotator.value));

  const validation = validateAnswer(question.kind, question.choices, draft.answer);
  const submit = el("button", { type: "button", "data-role": "submit" }, ["Submit annotation"]);
  const enabled =
    !props.busy &&
    canSubmit(draft.rationale, validation, props.draftQuestionId, question.id) &&
    props.annotatorId.trim().length > 0;
  if (!enabled) submit.setAttribute("disabled", "");
  submit.addEventListener("click", () => {
    if (!submit.hasAttribute("disabled")) props.onSubmit();
  });

  const form = el("div", { class: "annotation-form" }, [
    labelled("Rationale", rationale),
    labelled("Answer", answerControl),
    labelled("Annotator", annotator),
    submit,
  ]);

  if (!validation.ok && draft.answer.trim() !== "") {
    form.append(
      el("p", { class: "error", "data-role": "answer-invalid" }, [validation.message ?? "invalid answer"]),
    );
  }
  if (props.draftQuestionId !== null && props.draftQuestionId !== question.id) {
    form.append(
      el("p", { class: "error", "data-role": "stale-pending" }, [
        "The pending question changed since this draft was written; review before submitting.",
      ]),
    );
  }
  if (props.submitError !== null) {
    form.append(el("p", { class: "error", "data-role": "submit-error" }, [props.submitError]));
  }
  for (const warning of props.warnings) {
    form.append(el("p", { class: "warning", "data-role": "commit-warning" }, [warning]));
  }

  root.append(form);
  return root;
}

function renderSampleGroups(pending: PendingView): HTMLElement {
  const list = el("ul", { class: "sample-groups" });
  for (const group of pending.samples) {
    const heading = group.answer.valid ? group.answer.canonical : "unparseable";
    const raws = el("details", {}, [el("summary", {}, ["show sampled completions"])]);
    for (const raw of group.raws) {
      raws.append(el("pre", { class: "raw-sample" }, [raw]));
    }
    list.append(
      el("li", { "data-role": "sample-group", "data-count": String(group.count) }, [
        el("strong", {}, [`${group.count} × `]),
        el("span", { "data-role": "group-answer" }, [heading]),
        raws,
      ]),
    );
  }
  return el("div", { class: "samples" }, [
    el("h3", {}, ["Sampled answers"]),
    list,
  ]);
}

function renderAnswerControl(props: AnnotationProps): HTMLElement {
  const { question } = props.pending;
  const { draft } = props;
  const update = (answer: string) => {
    props.onDraftChange({ answer });
  };

  if (question.kind === "multiple_choice") {
    const select = el("select", { "data-role": "answer" });
    select.append(el("option", { value: "" }, ["— pick an option —"]));
    for (const choice of question.choices ?? []) {
      select.append(el("option", { value: choice.label }, [`(${choice.label}) ${choice.text}`]));
    }
    select.value = draft.answer;
    select.addEventListener("change", () => update(select.value));
    return select;
  }

  if (question.kind === "boolean") {
    const select = el("select", { "data-role": "answer" });
    select.append(el("option", { value: "" }, ["— pick an option —"]));
    select.append(el("option", { value: "yes" }, ["yes"]));
    select.append(el("option", { value: "no" }, ["no"]));
    select.value = draft.answer;
    select.addEventListener("change", () => update(select.value));
    return select;
  }

  const input = el("input", {
    "data-role": "answer",
    placeholder: question.kind === "numeric" ? "numeric answer" : "answer",
  });
  input.value = draft.answer;
  input.addEventListener("input", () => update(input.value));
  return input;
}

/** Shown between a committed annotation and the next pending question. */
export function renderRescoring(session: SessionView): HTMLElement {
  return el("section", { class: "rescoring", "data-role": "rescoring" }, [
    el("h2", {}, ["Scoring the remaining pool…"]),
    el("p", {}, [
      `${roundLabel(session.round, session.budgetK)} — the service is sampling completions; ` +
        "this screen refreshes automatically.",
    ]),
  ]);
}

// ---------------------------------------------------------------------------
// Progress & export view
// ---------------------------------------------------------------------------

export interface ProgressProps {
  session: SessionView;
  uncertainty: UncertaintyView | null;
  sort: ScoreSort;
  exportUrl: string;
  onSort(key: ScoreSortKey): void;
}

export function renderProgress(props: ProgressProps): HTMLElement {
  const root = el("section", { class: "progress", "data-role": "progress" });
  root.append(el("h2", {}, ["Progress"]));
  root.append(renderProgressRows(props.session.progress));

  if (props.session.status === "complete") {
    root.append(
      el("p", { class: "complete-note", "data-role": "complete-note" }, [
        "Session complete — the exemplar file is ready.",
      ]),
      el("p", {}, [
        el(
          "a",
          {
            "data-role": "export-link",
            href: props.exportUrl,
            download: `${props.session.id}-exemplars.json`,
          },
          ["Download exemplar file"],
        ),
      ]),
    );
  }
  if (props.session.status === "aborted") {
    root.append(
      el("p", { class: "error", "data-role": "aborted-note" }, [
        props.session.error ?? "Session aborted.",
      ]),
    );
  }

  if (props.uncertainty !== null) {
    root.append(renderScoreTable(props.uncertainty, props.sort, props.onSort));
  }
  return root;
}

function renderProgressRows(rows: ProgressRow[]): HTMLElement {
  if (rows.length === 0) {
    return el("p", { "data-role": "no-progress" }, ["No annotations committed yet."]);
  }
  const body = el("tbody");
  for (const row of rows) {
    body.append(
      el("tr", { "data-role": "progress-row", "data-question-id": row.questionId }, [
        el("td", {}, [String(row.round)]),
        el("td", {}, [row.questionId]),
        el("td", { class: "question-cell" }, [row.questionText]),
        el("td", {}, [formatScore(row.disagreement)]),
        el("td", {}, [formatScore(row.entropy)]),
        el("td", {}, [row.tieBreakApplied ? "tie break" : ""]),
        el("td", {}, [row.annotatorId]),
      ]),
    );
  }
  return el("table", { class: "progress-table" }, [
    el("thead", {}, [
      el("tr", {}, [
        el("th", {}, ["Round"]),
        el("th", {}, ["Question"]),
        el("th", {}, ["Text"]),
        el("th", {}, ["Disagreement"]),
        el("th", {}, ["Entropy"]),
        el("th", {}, ["Tie"]),
        el("th", {}, ["Annotator"]),
      ]),
    ]),
    body,
  ]);
}

/** Latest round's scores over the remaining pool, sortable per column. */
export function renderScoreTable(
  uncertainty: UncertaintyView,
  sort: ScoreSort,
  onSort: (key: ScoreSortKey) => void,
): HTMLElement {
  const header = (key: ScoreSortKey, text: string): HTMLElement => {
    const marker = sort.key === key ? (sort.descending ? " ↓" : " ↑") : "";
    const th = el("th", { "data-role": `sort-${key}`, class: "sortable" }, [text + marker]);
    th.addEventListener("click", () => onSort(key));
    return th;
  };

  const body = el("tbody");
  for (const row of sortScored(uncertainty.scored, sort)) {
    const selected = row.questionId === uncertainty.selectedId;
    body.append(
      el(
        "tr",
        {
          "data-role": "score-row",
          "data-question-id": row.questionId,
          class: selected ? "selected" : "",
        },
        [
          el("td", {}, [row.questionId + (selected ? " ◀" : "")]),
          el("td", {}, [formatScore(row.disagreement)]),
          el("td", {}, [formatScore(row.entropy)]),
        ],
      ),
    );
  }

  const note = uncertainty.tieBreakApplied
    ? " (tie broken toward the smallest question id)"
    : "";
  return el("section", { class: "score-table", "data-role": "score-table" }, [
    el("h3", {}, [
      `Round ${uncertainty.round} scores — selected ${uncertainty.selectedId} by ${uncertainty.metric}${note}`,
    ]),
    el("table", {}, [
      el("thead", {}, [
        el("tr", {}, [
          header("questionId", "Question"),
          header("disagreement", "Disagreement"),
          header("entropy", "Entropy"),
        ]),
      ]),
      body,
    ]),
  ]);
}
