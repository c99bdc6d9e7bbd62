/** Thin typed client over the study-service API. No state, no retries here. */

import type {
  NextResponse,
  RatingAck,
  RatingPayload,
  ServiceConfig,
  StartAllowed,
  StartDenied,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceHttpError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: unknown,
  ) {
    super(`service returned ${status}`);
  }
}

export type StartResult =
  | { allowed: true; value: StartAllowed }
  | { allowed: false; denied: StartDenied };

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    return this.fetchImpl(`${this.baseUrl}${path}`, init);
  }

  private async json<T>(resp: Response): Promise<T> {
    if (!resp.ok) {
      let detail: unknown = null;
      try {
        detail = (await resp.json()).detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ServiceHttpError(resp.status, detail);
    }
    return (await resp.json()) as T;
  }

  async config(): Promise<ServiceConfig> {
    return this.json(await this.request("/config"));
  }

  async register(subjectId: string): Promise<void> {
    await this.json(
      await this.request("/raters", {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ subject_id: subjectId }),
      }),
    );
  }

  async startSession(sessionId: string, subjectId: string): Promise<StartResult> {
    const resp = await this.request(`/sessions/${sessionId}/start`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ subject_id: subjectId }),
    });
    if (resp.status === 403) {
      const body = (await resp.json()) as { detail: StartDenied };
      return { allowed: false, denied: body.detail };
    }
    return { allowed: true, value: await this.json<StartAllowed>(resp) };
  }

  async next(sessionId: string, subjectId: string): Promise<NextResponse> {
    const query = new URLSearchParams({ subject_id: subjectId });
    return this.json(await this.request(`/sessions/${sessionId}/next?${query}`));
  }

  async submitRating(payload: RatingPayload): Promise<RatingAck> {
    return this.json(
      await this.request("/ratings", {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(payload),
      }),
    );
  }

  async exportCsv(): Promise<string> {
    const resp = await this.request("/export/ratings.csv");
    if (!resp.ok) {
      throw new ServiceHttpError(resp.status, null);
    }
    return resp.text();
  }
}
