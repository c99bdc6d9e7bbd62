/** Session state machine: one rater, one session, one in-flight submission.
 *
 * The server acknowledgment drives every advance (no optimistic UI), and a
 * rating can only be submitted after playback of the current stimulus has
 * started at least once.
 */

import { ServiceClient, ServiceHttpError } from "./api.js";
import type { NextStimulus, RatingPayload, ServiceConfig } from "./types.js";
import { validateRating } from "./types.js";

export type Phase =
  | "idle"
  | "loading"
  | "awaiting-playback"
  | "rating"
  | "submitting"
  | "completed"
  | "break"
  | "capped"
  | "blocked"
  | "error";

export interface SessionState {
  phase: Phase;
  sessionId: string;
  position: number;
  total: number;
  stimulus: NextStimulus | null;
  breakRemainingS: number | null;
  dailySessionsUsed: number;
  message: string | null;
}

export interface ControllerOptions {
  /** attempts per submission, first try included */
  maxAttempts?: number;
  retryDelayMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export class SessionController {
  private state: SessionState;
  private playbackStarted = false;
  private listeners: Array<(state: SessionState) => void> = [];
  private readonly maxAttempts: number;
  private readonly retryDelayMs: number;
  private readonly sleep: (ms: number) => Promise<void>;

  constructor(
    private readonly client: ServiceClient,
    private readonly subjectId: string,
    sessionId: string,
    private readonly config: ServiceConfig,
    options: ControllerOptions = {},
  ) {
    this.maxAttempts = options.maxAttempts ?? 3;
    this.retryDelayMs = options.retryDelayMs ?? 500;
    this.sleep = options.sleep ?? defaultSleep;
    this.state = {
      phase: "idle",
      sessionId,
      position: 0,
      total: 0,
      stimulus: null,
      breakRemainingS: null,
      dailySessionsUsed: 0,
      message: null,
    };
  }

  getState(): SessionState {
    return { ...this.state };
  }

  onChange(listener: (state: SessionState) => void): void {
    this.listeners.push(listener);
  }

  private update(patch: Partial<SessionState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.getState());
    }
  }

  canSubmit(): boolean {
    return this.state.phase === "rating" && this.playbackStarted;
  }

  markPlaybackStarted(): void {
    if (this.state.phase === "awaiting-playback") {
      this.playbackStarted = true;
      this.update({ phase: "rating" });
    }
  }

  async start(): Promise<void> {
    this.update({ phase: "loading", message: null });
    const result = await this.client.startSession(this.state.sessionId, this.subjectId);
    if (!result.allowed) {
      const { reason, retry_after_s } = result.denied;
      if (reason === "break") {
        this.update({ phase: "break", breakRemainingS: retry_after_s ?? null });
      } else if (reason === "daily-cap") {
        this.update({ phase: "capped", message: "Daily session limit reached; come back tomorrow." });
      } else {
        this.update({ phase: "blocked", message: `Cannot start session: ${reason}.` });
      }
      return;
    }
    this.update({ position: result.value.position, total: result.value.total });
    await this.loadNext();
  }

  private async loadNext(): Promise<void> {
    this.update({ phase: "loading" });
    const next = await this.client.next(this.state.sessionId, this.subjectId);
    if (next.done) {
      this.update({
        phase: "completed",
        stimulus: null,
        position: next.position,
        total: next.total,
        dailySessionsUsed: this.state.dailySessionsUsed + 1,
      });
      return;
    }
    this.playbackStarted = false;
    this.update({
      phase: "awaiting-playback",
      stimulus: next,
      position: next.position,
      total: next.total,
    });
  }

  async submit(q: number, distortions: number[]): Promise<void> {
    if (!this.canSubmit()) {
      this.update({ message: "Play the stimulus before rating it." });
      return;
    }
    const stimulus = this.state.stimulus;
    if (!stimulus) {
      throw new Error("no current stimulus");
    }
    const payload: RatingPayload = {
      subject_id: this.subjectId,
      stimulus_id: stimulus.stimulus_id,
      q,
      d: distortions,
    };
    const problem = validateRating(payload, this.config);
    if (problem) {
      this.update({ message: problem });
      return;
    }
    this.update({ phase: "submitting", message: null });
    const ack = await this.postWithRetry(payload);
    if (ack.session_finished) {
      this.update({
        phase: "completed",
        stimulus: null,
        position: this.state.total,
        dailySessionsUsed: this.state.dailySessionsUsed + 1,
      });
      return;
    }
    await this.loadNext();
  }

  /** Resubmission is safe: the service overwrites by (subject, stimulus). */
  private async postWithRetry(payload: RatingPayload) {
    let lastError: unknown = null;
    for (let attempt = 1; attempt <= this.maxAttempts; attempt += 1) {
      try {
        return await this.client.submitRating(payload);
      } catch (error) {
        if (error instanceof ServiceHttpError) {
          this.update({ phase: "error", message: `Rating rejected: ${JSON.stringify(error.detail)}` });
          throw error;
        }
        lastError = error;
        if (attempt < this.maxAttempts) {
          await this.sleep(this.retryDelayMs);
        }
      }
    }
    this.update({ phase: "error", message: "Network failure; rating not confirmed." });
    throw lastError;
  }
}
