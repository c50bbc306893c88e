/**
 * Typed client for the preference-study HTTP API.
 *
 * The service owns all progress: `nextPair` always returns the judge's first
 * still-unjudged pair, and `submitJudgment` verdicts are expressed in
 * presentation space ("first" = the view shown on the left). Any left/right
 * counterbalancing is applied and undone server-side.
 */

export interface Progress {
  done: number;
  total: number;
}

export interface PairView {
  pair_index: number;
  left_uri: string;
  right_uri: string;
  progress: Progress;
}

export type Verdict = "first" | "second" | "both";

/** Non-2xx response, carrying the HTTP status and the service's detail text. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class StudyClient {
  constructor(
    readonly apiBase: string,
    readonly sessionId: string,
    readonly judgeId: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  /** The next pair to present, or null once every pair has been judged. */
  async nextPair(): Promise<PairView | null> {
    const url =
      `${this.apiBase}/api/session/${encodeURIComponent(this.sessionId)}` +
      `/next?judge=${encodeURIComponent(this.judgeId)}`;
    const data = await this.request(url);
    return data.done === true ? null : (data as PairView);
  }

  async submitJudgment(pairIndex: number, verdict: Verdict): Promise<void> {
    await this.request(`${this.apiBase}/api/judgment`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({
        session_id: this.sessionId,
        judge_id: this.judgeId,
        pair_index: pairIndex,
        verdict,
      }),
    });
  }

  private async request(url: string, init?: RequestInit): Promise<any> {
    const response = await this.fetchImpl(url, init);
    if (!response.ok) {
      let detail = response.statusText || "request failed";
      try {
        const body = await response.json();
        if (typeof body?.detail === "string") {
          detail = body.detail;
        }
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return response.json();
  }
}
