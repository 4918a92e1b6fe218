/** View state machine: polling, label submission, and playback position. */

import type { Api, Choice, PendingQuery, RunStatus } from "./api.js";
import { advance } from "./playback.js";

export const BASE_POLL_MS = 1000;
export const MAX_POLL_MS = 15000;

export type Banner = { kind: "error" | "info"; text: string } | null;

export interface ViewState {
  query: PendingQuery | null;
  status: RunStatus | null;
  playbackPos: number;
  inFlight: boolean;
  banner: Banner;
  pollDelayMs: number;
}

export function initialState(): ViewState {
  return {
    query: null,
    status: null,
    playbackPos: 0,
    inFlight: false,
    banner: null,
    pollDelayMs: BASE_POLL_MS,
  };
}

/**
 * Owns all transitions. The DOM layer only calls poll/submit/tick and
 * reads `state`. At most one request is in flight at any time: poll()
 * is a no-op while busy and submit() ignores repeated clicks.
 */
export class ViewController {
  state: ViewState = initialState();

  constructor(private readonly api: Api) {}

  canLabel(): boolean {
    return this.state.query !== null && !this.state.inFlight;
  }

  /** Advance the shared playback clock; both canvases read the result. */
  tick(dtMs: number): void {
    const q = this.state.query;
    if (q === null) return;
    this.state.playbackPos = advance(this.state.playbackPos, dtMs, q.step_count);
  }

  async poll(): Promise<void> {
    if (this.state.inFlight) return;
    this.state.inFlight = true;
    try {
      this.state.status = await this.api.fetchStatus();
      if (this.state.query === null) {
        const pending = await this.api.fetchPending();
        if (pending !== null) {
          this.state.query = pending;
          this.state.playbackPos = 0;
        }
      }
      this.state.pollDelayMs = BASE_POLL_MS;
      if (this.state.banner !== null && this.state.banner.kind === "error") {
        this.state.banner = null;
      }
    } catch {
      this.state.banner = {
        kind: "error",
        text: "Cannot reach the label service. Retrying.",
      };
      this.state.pollDelayMs = Math.min(this.state.pollDelayMs * 2, MAX_POLL_MS);
    } finally {
      this.state.inFlight = false;
    }
  }

  async submit(choice: Choice): Promise<void> {
    const query = this.state.query;
    if (query === null || this.state.inFlight) return;
    this.state.inFlight = true;
    try {
      const result = await this.api.postLabel(query.query_id, choice);
      if (result === "accepted") {
        this.state.banner = null;
      } else {
        this.state.banner = {
          kind: "info",
          text: `Label not accepted (${result}); fetching the next query.`,
        };
      }
    } catch {
      this.state.banner = {
        kind: "error",
        text: "Label post failed. The query will reload if still open.",
      };
    } finally {
      this.state.query = null;
      this.state.playbackPos = 0;
      this.state.inFlight = false;
    }
    await this.poll();
  }
}
