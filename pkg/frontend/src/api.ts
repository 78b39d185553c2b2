/**
 * Typed client for the labeling service protocol.
 *
 * GET  /api/queries -> { iteration, pending: [{instance_id, item_ref, ...}] }
 * POST /api/labels  { instance_id, label } -> 200 | 409 duplicate | 422 invalid
 * GET  /api/status  -> { iteration, queried, budget, labeled_count,
 *                        latest_metrics, history }
 * GET  /api/classes -> { labels: [string] }
 */

export interface QueryCard {
  instance_id: number;
  item_ref: string;
  score?: number;
  distinctiveness?: number;
  uncertainty?: number;
}

export interface QueriesPayload {
  iteration: number;
  pending: QueryCard[];
}

export interface MetricPoint {
  queries: number;
  accuracy: number;
  macro_auc: number;
}

export interface StatusPayload {
  iteration: number;
  queried: number;
  budget: number;
  labeled_count: number;
  latest_metrics: MetricPoint | null;
  history: MetricPoint[];
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class LabelClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async getJson<T>(path: string): Promise<T> {
    const resp = await this.fetchFn(this.baseUrl + path);
    if (!resp.ok) {
      throw new ApiError(resp.status, await resp.text());
    }
    return (await resp.json()) as T;
  }

  getQueries(): Promise<QueriesPayload> {
    return this.getJson<QueriesPayload>("/api/queries");
  }

  getStatus(): Promise<StatusPayload> {
    return this.getJson<StatusPayload>("/api/status");
  }

  async getClasses(): Promise<string[]> {
    const doc = await this.getJson<{ labels: string[] }>("/api/classes");
    return doc.labels;
  }

  /** Resolves on 200; throws ApiError with the server's message on 409/422. */
  async submitLabel(instanceId: number, label: number): Promise<void> {
    const resp = await this.fetchFn(this.baseUrl + "/api/labels", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ instance_id: instanceId, label }),
    });
    if (resp.ok) {
      return;
    }
    let detail = `submission rejected (${resp.status})`;
    try {
      const body = (await resp.json()) as { error?: string };
      if (body.error) detail = body.error;
    } catch {
      /* non-JSON error body; keep the generic message */
    }
    throw new ApiError(resp.status, detail);
  }
}
