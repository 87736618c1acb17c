/** Typed client for the annotation service HTTP API.
 *
 * Every mutation the UI performs goes through this module; the client holds
 * no session state of its own and computes nothing the server already
 * reports.
 */

export type TaskKind = "numeric" | "multiple_choice" | "boolean" | "text";

export type SessionStatus =
  | "awaiting_scores"
  | "awaiting_annotation"
  | "complete"
  | "aborted";

export interface SessionConfigInput {
  budget_k?: number;
  metric?: string;
  strategy?: string;
  seed?: number;
  samples_l?: number;
  pool_cap_s?: number;
  sampling_temperature?: number;
  max_in_flight?: number;
}

export interface SessionSummary {
  id: string;
  dataset: string;
  status: SessionStatus;
  round: number;
  budgetK: number;
  strategy: string;
  metric: string;
}

export interface ChoiceView {
  label: string;
  text: string;
}

export interface QuestionView {
  id: string;
  text: string;
  kind: TaskKind;
  choices: ChoiceView[] | null;
}

export interface AnswerView {
  canonical: string;
  valid: boolean;
}

export interface SampleGroup {
  answer: AnswerView;
  count: number;
  raws: string[];
}

export interface PendingView {
  round: number;
  question: QuestionView;
  samples: SampleGroup[];
  disagreement: number;
  entropy: number;
}

export interface ProgressRow {
  round: number;
  questionId: string;
  questionText: string;
  disagreement: number;
  entropy: number;
  tieBreakApplied: boolean;
  annotatorId: string;
}

export interface SessionView extends SessionSummary {
  poolSize: number;
  progress: ProgressRow[];
  pending: PendingView | null;
  error: string | null;
}

export interface ScoredRow {
  questionId: string;
  disagreement: number;
  entropy: number;
}

export interface UncertaintyView {
  round: number;
  metric: string;
  selectedId: string;
  tieBreakApplied: boolean;
  scored: ScoredRow[];
}

export interface AnnotationInput {
  questionId: string;
  rationale: string;
  answer: string;
  annotatorId: string;
}

export interface CommitResult {
  status: SessionStatus;
  round: number;
  alreadyCommitted: boolean;
  warnings: string[];
}

/** Error raised for any non-2xx response or network failure.
 *
 * `status` is the HTTP status (0 when the service could not be reached) and
 * `code` is the machine-readable error code from the response body.
 */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;

  constructor(baseUrl = "", fetchImpl?: FetchLike) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    const impl = fetchImpl ?? (globalThis.fetch as FetchLike | undefined);
    if (!impl) {
      throw new Error("no fetch implementation available");
    }
    // Bind so the implementation keeps its own `this` (window.fetch cares).
    this.fetchImpl = (input, init) => impl.call(globalThis, input, init);
  }

  private async send(path: string, init?: RequestInit): Promise<Response> {
    let response: Response;
    try {
      response = await this.fetchImpl(this.baseUrl + path, init);
    } catch (error) {
      throw new ApiError(0, "NetworkError", `annotation service unreachable: ${error}`);
    }
    if (!response.ok) {
      let code = "HttpError";
      let message = `request failed with status ${response.status}`;
      try {
        const body = (await response.json()) as { code?: string; message?: string };
        if (typeof body.code === "string") code = body.code;
        if (typeof body.message === "string") message = body.message;
      } catch {
        // Non-JSON error body; keep the generic message.
      }
      throw new ApiError(response.status, code, message);
    }
    return response;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.send(path, init);
    return (await response.json()) as T;
  }

  async listSessions(): Promise<SessionSummary[]> {
    const body = await this.request<{ sessions: SessionSummary[] }>("/sessions");
    return body.sessions;
  }

  async createSession(dataset: string, config: SessionConfigInput): Promise<string> {
    const body = await this.request<{ id: string }>("/sessions", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ dataset, config }),
    });
    return body.id;
  }

  getSession(id: string): Promise<SessionView> {
    return this.request<SessionView>(`/sessions/${encodeURIComponent(id)}`);
  }

  getPending(id: string): Promise<PendingView> {
    return this.request<PendingView>(`/sessions/${encodeURIComponent(id)}/pending`);
  }

  postAnnotation(id: string, reply: AnnotationInput): Promise<CommitResult> {
    return this.request<CommitResult>(`/sessions/${encodeURIComponent(id)}/annotations`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(reply),
    });
  }

  getUncertainty(id: string): Promise<UncertaintyView> {
    return this.request<UncertaintyView>(`/sessions/${encodeURIComponent(id)}/uncertainty`);
  }

  /** URL of the exemplar-file download; the export link points here verbatim. */
  exportUrl(id: string): string {
    return `${this.baseUrl}/sessions/${encodeURIComponent(id)}/export`;
  }

  /** Fetch the exemplar file exactly as served, without any decoding. */
  async fetchExport(id: string): Promise<Uint8Array> {
    const response = await this.send(`/sessions/${encodeURIComponent(id)}/export`);
    return new Uint8Array(await response.arrayBuffer());
  }
}
