import type { ConfirmResponse, NextPayload, StatsPayload } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`service error ${status}: ${detail}`);
  }
}

async function errorDetail(res: Response): Promise<string> {
  try {
    const body = await res.json();
    if (body && typeof body.detail === "string") return body.detail;
    return JSON.stringify(body);
  } catch {
    return res.statusText || "unknown error";
  }
}

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (input, init) => globalThis.fetch(input, init),
  ) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  /** Queue head with adjusted predictions, or null when the queue is done. */
  async nextReport(): Promise<NextPayload | null> {
    const res = await this.fetchFn(`${this.baseUrl}/session/next`);
    if (res.status === 204) return null;
    if (!res.ok) throw new ApiError(res.status, await errorDetail(res));
    return (await res.json()) as NextPayload;
  }

  async confirmLabels(
    reportId: string,
    labels: string[],
    create = false,
  ): Promise<ConfirmResponse> {
    const res = await this.fetchFn(
      `${this.baseUrl}/reports/${encodeURIComponent(reportId)}/labels`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ labels, create }),
      },
    );
    if (!res.ok) throw new ApiError(res.status, await errorDetail(res));
    return (await res.json()) as ConfirmResponse;
  }

  async stats(): Promise<StatsPayload> {
    const res = await this.fetchFn(`${this.baseUrl}/stats`);
    if (!res.ok) throw new ApiError(res.status, await errorDetail(res));
    return (await res.json()) as StatsPayload;
  }

  async searchLabels(query: string): Promise<string[]> {
    const res = await this.fetchFn(
      `${this.baseUrl}/labels/search?q=${encodeURIComponent(query)}`,
    );
    if (!res.ok) throw new ApiError(res.status, await errorDetail(res));
    return ((await res.json()) as { labels: string[] }).labels;
  }
}
