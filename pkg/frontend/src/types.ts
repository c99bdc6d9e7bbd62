/** Payload shapes of the study-service HTTP/JSON API. */

export interface ServiceConfig {
  raw_scale: [number, number];
  break_minutes: number;
  daily_cap: number;
  timezone: string | null;
  distortion_labels: string[];
}

export interface StartAllowed {
  allow: true;
  position: number;
  total: number;
}

export type DenyReason = "break" | "daily-cap" | "in-progress" | "completed";

export interface StartDenied {
  reason: DenyReason;
  retry_after_s?: number;
}

export interface NextStimulus {
  done: false;
  stimulus_id: string;
  position: number;
  total: number;
  video_url: string;
  audio_url: string;
}

export interface NextDone {
  done: true;
  position: number;
  total: number;
}

export type NextResponse = NextStimulus | NextDone;

export interface RatingPayload {
  subject_id: string;
  stimulus_id: string;
  q: number;
  d: number[];
}

export interface RatingAck {
  stored: boolean;
  superseded: boolean;
  session_finished: boolean;
}

export const DISTORTION_COUNT = 12;

/** Client-side schema check mirroring the service contract. */
export function validateRating(payload: RatingPayload, config: ServiceConfig): string | null {
  if (payload.d.length !== DISTORTION_COUNT) {
    return `distortion vector must have ${DISTORTION_COUNT} entries, got ${payload.d.length}`;
  }
  if (payload.d.some((bit) => bit !== 0 && bit !== 1)) {
    return "distortion vector entries must be 0 or 1";
  }
  const [lo, hi] = config.raw_scale;
  if (!Number.isFinite(payload.q) || payload.q < lo || payload.q > hi) {
    return `score ${payload.q} outside the raw scale [${lo}, ${hi}]`;
  }
  if (!payload.subject_id || !payload.stimulus_id) {
    return "subject_id and stimulus_id are required";
  }
  return null;
}
