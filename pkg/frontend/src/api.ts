/** Typed client for the topic service REST API.
 *
 * The UI is a pure client: every number it shows comes from these
 * endpoints, nothing is recomputed in the browser.
 */

export interface RunParams {
  gamma: number;
  reduction: number;
  n_rep: number;
  n_con: number;
  min_size_fraction: number;
  seed: number;
}

export interface RunSummary {
  run: string;
  status: "queued" | "running" | "done" | "failed";
  params: RunParams;
  n_topics?: number;
  coverage?: number;
  error?: string | null;
}

export interface PostRunResponse {
  run: string;
  status: string;
  cached: boolean;
  job?: string;
  n_topics?: number;
}

export interface TopicSummary {
  id: number;
  size: number;
}

export interface RunTopics {
  run: string;
  n_topics: number;
  coverage: number;
  topics: TopicSummary[];
  unassigned: number;
}

export interface SheetCell {
  term: string;
  r: number | null;
}

export interface Sheet {
  topic: number;
  strata: SheetCell[][];
  residual: SheetCell[];
}

export interface FlowMatrix {
  rows: number[];
  cols: number[];
  counts: number[][];
}

export interface TopicTerms {
  id: number;
  terms: string[];
}

export interface TopicsTermsResponse {
  run: string;
  topics: TopicTerms[];
  unassigned: string[];
}

export interface ApiError {
  error: string;
  detail: string;
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ServiceError extends Error {
  constructor(readonly status: number, readonly detail: string) {
    super(`service error ${status}: ${detail}`);
  }
}

export class ApiClient {
  constructor(private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init)) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as ApiError;
        detail = body.detail ?? detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ServiceError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  listRuns(): Promise<RunSummary[]> {
    return this.request<RunSummary[]>("/api/runs");
  }

  getRun(runKey: string): Promise<RunSummary> {
    return this.request<RunSummary>(`/api/runs/${runKey}`);
  }

  startRun(body: { gamma: number; reduction?: number; seed?: number }): Promise<PostRunResponse> {
    return this.request<PostRunResponse>("/api/runs", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  runTopics(runKey: string): Promise<RunTopics> {
    return this.request<RunTopics>(`/api/runs/${runKey}/topics`);
  }

  sheet(runKey: string, topicId: number): Promise<Sheet> {
    return this.request<Sheet>(`/api/topics/${runKey}/${topicId}/sheet`);
  }

  compare(runA: string, runB: string): Promise<FlowMatrix> {
    return this.request<FlowMatrix>(`/api/runs/${runA}/compare/${runB}`);
  }

  topicsTerms(runKey: string): Promise<TopicsTermsResponse> {
    return this.request<TopicsTermsResponse>(`/api/topics-terms?run=${runKey}`);
  }
}
