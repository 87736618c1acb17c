/** Local draft persistence for the annotation screen.
 *
 * Drafts are keyed by (session id, round) so a refresh mid-annotation brings
 * the typed rationale and answer back, and a committed round never leaks its
 * text into the next question. Storage failures (private browsing, quota)
 * degrade to "no draft" rather than breaking the screen.
 */

export interface Draft {
  rationale: string;
  answer: string;
}

export interface StorageLike {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const PREFIX = "adaprompt-draft";
const ANNOTATOR_KEY = "adaprompt-annotator-id";

function keyFor(sessionId: string, round: number): string {
  return `${PREFIX}:${sessionId}:${round}`;
}

export class DraftStore {
  constructor(private readonly storage: StorageLike) {}

  load(sessionId: string, round: number): Draft | null {
    try {
      const raw = this.storage.getItem(keyFor(sessionId, round));
      if (!raw) return null;
      const data = JSON.parse(raw) as Partial<Draft> | null;
      if (data && typeof data.rationale === "string" && typeof data.answer === "string") {
        return { rationale: data.rationale, answer: data.answer };
      }
      return null;
    } catch {
      return null;
    }
  }

  save(sessionId: string, round: number, draft: Draft): void {
    try {
      this.storage.setItem(keyFor(sessionId, round), JSON.stringify(draft));
    } catch {
      // Draft autosave is best-effort.
    }
  }

  clear(sessionId: string, round: number): void {
    try {
      this.storage.removeItem(keyFor(sessionId, round));
    } catch {
      // Nothing to recover; the server copy is authoritative after commit.
    }
  }

  loadAnnotatorId(): string {
    try {
      return this.storage.getItem(ANNOTATOR_KEY) ?? "";
    } catch {
      return "";
    }
  }

  saveAnnotatorId(annotatorId: string): void {
    try {
      this.storage.setItem(ANNOTATOR_KEY, annotatorId);
    } catch {
      // Best-effort, same as drafts.
    }
  }
}
