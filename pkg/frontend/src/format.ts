/** Pure display and input-validation helpers.
 *
 * Scores are rendered exactly as the server reports them; nothing in the UI
 * recomputes disagreement or entropy.
 */

import type { ChoiceView, SessionStatus, TaskKind } from "./api.js";

export function formatScore(value: number | null | undefined): string {
  if (value === null || value === undefined || Number.isNaN(value)) return "—";
  return value.toFixed(3);
}

export function statusLabel(status: SessionStatus): string {
  switch (status) {
    case "awaiting_scores":
      return "scoring";
    case "awaiting_annotation":
      return "needs annotation";
    case "complete":
      return "complete";
    case "aborted":
      return "aborted";
  }
}

export function roundLabel(round: number, budgetK: number): string {
  return `round ${round} of ${budgetK}`;
}

export interface AnswerValidation {
  ok: boolean;
  message?: string;
}

/** Lightweight client-side check of the answer field.
 *
 * The server remains the authority on parseability (a 422 is surfaced
 * inline); this only gates obviously unusable input so the submit button can
 * reflect it immediately.
 */
export function validateAnswer(
  kind: TaskKind,
  choices: ChoiceView[] | null,
  text: string,
): AnswerValidation {
  const trimmed = text.trim();
  if (!trimmed) return { ok: false, message: "an answer is required" };
  if (kind === "multiple_choice") {
    const labels = (choices ?? []).map((choice) => choice.label);
    if (!labels.includes(trimmed.toUpperCase())) {
      return { ok: false, message: `pick one of ${labels.join(", ")}` };
    }
  }
  if (kind === "boolean") {
    const allowed = ["yes", "no", "true", "false"];
    if (!allowed.includes(trimmed.toLowerCase())) {
      return { ok: false, message: "answer yes or no" };
    }
  }
  return { ok: true };
}

/** Whether the submit button is enabled.
 *
 * Requires a non-blank rationale, a valid answer, and a draft that still
 * targets the question the server currently reports as pending — a stale
 * draft (another tab advanced the session) must not be submittable.
 */
export function canSubmit(
  rationale: string,
  validation: AnswerValidation,
  draftQuestionId: string | null,
  pendingQuestionId: string | null,
): boolean {
  return (
    rationale.trim().length > 0 &&
    validation.ok &&
    draftQuestionId !== null &&
    pendingQuestionId !== null &&
    draftQuestionId === pendingQuestionId
  );
}

/** Sort key for the uncertainty table. */
export type ScoreSortKey = "questionId" | "disagreement" | "entropy";

export interface ScoreSort {
  key: ScoreSortKey;
  descending: boolean;
}

export function sortScored<T extends { questionId: string; disagreement: number; entropy: number }>(
  rows: readonly T[],
  sort: ScoreSort,
): T[] {
  const copy = [...rows];
  copy.sort((a, b) => {
    let order: number;
    if (sort.key === "questionId") {
      order = a.questionId < b.questionId ? -1 : a.questionId > b.questionId ? 1 : 0;
    } else {
      order = a[sort.key] - b[sort.key];
      if (order === 0) {
        order = a.questionId < b.questionId ? -1 : a.questionId > b.questionId ? 1 : 0;
      }
    }
    return sort.descending ? -order : order;
  });
  return copy;
}
