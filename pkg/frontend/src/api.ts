import type { ExpansionRecord, HistoryView, JobView, ProjectView } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

/** Thin client over the engine's HTTP API. */
export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path);
    if (!response.ok) {
      throw new ApiError(response.status, await safeDetail(response));
    }
    return (await response.json()) as T;
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await safeDetail(response));
    }
    return (await response.json()) as T;
  }

  getProject(): Promise<ProjectView> {
    return this.get("/api/project");
  }

  getHistory(): Promise<HistoryView> {
    return this.get("/api/history");
  }

  getJob(jobId: string): Promise<JobView> {
    return this.get(`/api/jobs/${jobId}`);
  }

  getCandidates(jobId: string): Promise<ExpansionRecord> {
    return this.get(`/api/candidates?job=${encodeURIComponent(jobId)}`);
  }

  postExpand(request: string): Promise<{ job: string }> {
    return this.post("/api/expand", { request });
  }

  postPlan(prompt: string): Promise<{ job: string }> {
    return this.post("/api/plan", { prompt });
  }

  /** Poll a job at a fixed interval until it reaches a terminal state. */
  async pollJob(
    jobId: string,
    options: {
      intervalMs?: number;
      timeoutMs?: number;
      sleep?: (ms: number) => Promise<void>;
      onUpdate?: (job: JobView) => void;
    } = {},
  ): Promise<JobView> {
    const intervalMs = options.intervalMs ?? 1000;
    const timeoutMs = options.timeoutMs ?? 10 * 60 * 1000;
    const sleep = options.sleep ?? defaultSleep;
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const job = await this.getJob(jobId);
      options.onUpdate?.(job);
      if (job.state === "done" || job.state === "failed") {
        return job;
      }
      if (Date.now() > deadline) {
        throw new Error(`job ${jobId} timed out`);
      }
      await sleep(intervalMs);
    }
  }
}

async function safeDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: string };
    return body.detail ?? response.statusText;
  } catch {
    return response.statusText;
  }
}

/** Client-side validation; returns an error message or null when OK. */
export function validateExpansionRequest(text: string): string | null {
  if (!text.trim()) {
    return "Describe what to add before submitting.";
  }
  if (text.trim().length > 500) {
    return "Keep the request under 500 characters.";
  }
  return null;
}

/**
 * Validate, then submit. Invalid input never reaches the network; the caller
 * gets either {error} or {job}.
 */
export async function submitExpansion(
  client: ApiClient,
  text: string,
): Promise<{ error: string } | { job: string }> {
  const error = validateExpansionRequest(text);
  if (error !== null) {
    return { error };
  }
  return client.postExpand(text.trim());
}
