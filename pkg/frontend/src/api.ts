/** Typed client for the annotation server's JSON API. */

export type Verdict = "legitimate" | "not_legitimate" | "unsure";

export interface TaskPayload {
  task_id: string;
  story: string;
  sentences: string[];
  error_indices: number[];
  contradicted_indices: number[];
  explanation: string;
  votes_so_far: number;
}

export interface Progress {
  pending: number;
  accepted: number;
  rejected: number;
  votes: {
    legitimate: number;
    not_legitimate: number;
    unsure: number;
    total: number;
  };
}

export type VoteResult =
  | { kind: "ok"; resolution: string; votes: number }
  | { kind: "already_voted" };

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** Everything the review session needs from the server. */
export interface AnnotationApi {
  nextTask(annotator: string): Promise<TaskPayload | null>;
  vote(taskId: string, annotator: string, verdict: Verdict): Promise<VoteResult>;
  progress(): Promise<Progress>;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient implements AnnotationApi {
  constructor(
    private readonly baseUrl: string = "",
    private readonly token: string | null = null,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private url(path: string, params: Record<string, string> = {}): string {
    const query = new URLSearchParams(params);
    if (this.token) {
      query.set("token", this.token);
    }
    const qs = query.toString();
    return `${this.baseUrl}${path}${qs ? `?${qs}` : ""}`;
  }

  async nextTask(annotator: string): Promise<TaskPayload | null> {
    const res = await this.fetchFn(this.url("/api/tasks/next", { annotator }));
    if (!res.ok) {
      throw new ApiError(res.status, await errorText(res));
    }
    const body = (await res.json()) as { task: TaskPayload | null };
    return body.task;
  }

  async vote(
    taskId: string,
    annotator: string,
    verdict: Verdict,
  ): Promise<VoteResult> {
    const res = await this.fetchFn(
      this.url(`/api/tasks/${encodeURIComponent(taskId)}/vote`),
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ annotator, verdict }),
      },
    );
    if (res.status === 409) {
      return { kind: "already_voted" };
    }
    if (!res.ok) {
      throw new ApiError(res.status, await errorText(res));
    }
    const body = (await res.json()) as { resolution: string; votes: number };
    return { kind: "ok", resolution: body.resolution, votes: body.votes };
  }

  async progress(): Promise<Progress> {
    const res = await this.fetchFn(this.url("/api/progress"));
    if (!res.ok) {
      throw new ApiError(res.status, await errorText(res));
    }
    return (await res.json()) as Progress;
  }
}

async function errorText(res: Response): Promise<string> {
  try {
    const body = (await res.json()) as { error?: unknown };
    if (body && typeof body.error === "string") {
      return body.error;
    }
  } catch {
    // not a JSON error body
  }
  return `request failed with status ${res.status}`;
}
