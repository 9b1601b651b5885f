import type { FetchLike } from "../src/api.js";
import type { NextPayload, PredictionRow, StatsPayload } from "../src/types.js";

export function makeRow(overrides: Partial<PredictionRow> = {}): PredictionRow {
  return {
    label: "liba@1.0",
    score: 0.5,
    in_cache: false,
    recency_index: null,
    version_transferred: false,
    ...overrides,
  };
}

export function makePayload(rows: PredictionRow[], reportId = "CVE-2020-0001"): NextPayload {
  return {
    report: {
      id: reportId,
      published: "2020-01-01",
      description: "A corruption flaw in the alpha engine package.",
      references: [
        { url: "https://access.redhat.com/errata/1", title: "advisory", text: "body text" },
      ],
      cpe: ["cpe:2.3:a:alphaengine:alpha_engine:1.0:*:*:*:*:*:*:*"],
    },
    predictions: rows,
    adjustment: { boost_base: 0.4, magnitude: 2, window: 3 },
    position: 0,
    remaining: 2,
    total: 2,
  };
}

export function makeStats(): StatsPayload {
  return {
    confirmed: 1,
    remaining: 1,
    cache: { size: 1, capacity: 40 },
    metrics: {
      n: 1,
      k: { "1": { precision: 1, recall: 1, f1: 1 } },
      avg_f1: 1,
    },
    unseen_label_hits: 0,
  };
}

export interface LoggedRequest {
  method: string;
  path: string;
  body: unknown;
}

/** Scripted fetch: responses consumed per (method, path) in order. */
export function scriptedFetch(
  script: Array<{ method: string; path: string; response: () => Response }>,
): { fetch: FetchLike; requests: LoggedRequest[] } {
  const remaining = [...script];
  const requests: LoggedRequest[] = [];
  const fetchFn: FetchLike = async (input, init) => {
    const url = new URL(input, "http://service.test");
    const method = (init?.method ?? "GET").toUpperCase();
    requests.push({
      method,
      path: url.pathname + url.search,
      body: init?.body ? JSON.parse(String(init.body)) : undefined,
    });
    const idx = remaining.findIndex(
      (entry) => entry.method === method && url.pathname.startsWith(entry.path),
    );
    if (idx === -1) throw new Error(`unscripted request: ${method} ${url.pathname}`);
    const [entry] = remaining.splice(idx, 1);
    return entry.response();
  };
  return { fetch: fetchFn, requests };
}

export function jsonResponse(payload: unknown, status = 200): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function emptyResponse(status = 204): Response {
  return new Response(null, { status });
}
