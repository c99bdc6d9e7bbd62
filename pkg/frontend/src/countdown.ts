/** Break countdown: render MM:SS and tick once a second. */

export function formatCountdown(totalSeconds: number): string {
  const clamped = Math.max(0, Math.round(totalSeconds));
  const minutes = Math.floor(clamped / 60);
  const seconds = clamped % 60;
  return `${String(minutes).padStart(2, "0")}:${String(seconds).padStart(2, "0")}`;
}

export class Countdown {
  private timer: ReturnType<typeof setInterval> | null = null;
  private readonly startedAtMs: number;

  constructor(
    private remainingS: number,
    private readonly onTick: (display: string, remainingS: number) => void,
    private readonly onDone: () => void,
    private readonly now: () => number = () => Date.now(),
  ) {
    this.startedAtMs = this.now();
  }

  start(): void {
    this.emit();
    this.timer = setInterval(() => this.emit(), 1000);
  }

  private emit(): void {
    const elapsed = (this.now() - this.startedAtMs) / 1000;
    const left = this.remainingS - elapsed;
    if (left <= 0) {
      this.stop();
      this.onTick(formatCountdown(0), 0);
      this.onDone();
      return;
    }
    this.onTick(formatCountdown(left), left);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
