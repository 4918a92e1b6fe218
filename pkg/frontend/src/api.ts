/** Typed wrappers around the label service HTTP API. */

export interface SegmentTrace {
  positions: [number, number][];
}

export interface PendingQuery {
  query_id: string;
  left: SegmentTrace;
  right: SegmentTrace;
  env: string;
  step_count: number;
}

export interface RunStatus {
  step: number;
  feedback_used: number;
  feedback_budget: number;
  latest_return_gt: number | null;
  done: boolean;
  queue_depth: number;
}

export type Choice = "left" | "right" | "skip";
export type PostResult = "accepted" | "conflict" | "not_found";

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export interface Api {
  fetchPending(): Promise<PendingQuery | null>;
  postLabel(queryId: string, choice: Choice): Promise<PostResult>;
  fetchStatus(): Promise<RunStatus>;
}

/** The real client; `base` is prepended to every path (empty = same origin). */
export function makeApi(base = ""): Api {
  return {
    async fetchPending(): Promise<PendingQuery | null> {
      const res = await fetch(`${base}/api/pending`);
      if (res.status === 204) return null;
      if (!res.ok) throw new ApiError(res.status, `pending failed: ${res.status}`);
      return (await res.json()) as PendingQuery;
    },

    async postLabel(queryId: string, choice: Choice): Promise<PostResult> {
      const res = await fetch(`${base}/api/labels`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ query_id: queryId, choice }),
      });
      if (res.status === 200) return "accepted";
      if (res.status === 409) return "conflict";
      if (res.status === 404) return "not_found";
      throw new ApiError(res.status, `label post failed: ${res.status}`);
    },

    async fetchStatus(): Promise<RunStatus> {
      const res = await fetch(`${base}/api/status`);
      if (!res.ok) throw new ApiError(res.status, `status failed: ${res.status}`);
      return (await res.json()) as RunStatus;
    },
  };
}
