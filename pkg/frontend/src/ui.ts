/** DOM view for a rating session. Framework-free; state arrives via the
 * controller's onChange and flows one way into the DOM. */

import { Countdown } from "./countdown.js";
import { SessionController, SessionState } from "./session.js";
import type { ServiceConfig } from "./types.js";

export interface ViewHandles {
  root: HTMLElement;
  video: HTMLVideoElement;
  audio: HTMLAudioElement;
  playButton: HTMLButtonElement;
  slider: HTMLInputElement;
  sliderValue: HTMLElement;
  checkboxes: HTMLInputElement[];
  submitButton: HTMLButtonElement;
  progress: HTMLElement;
  countdown: HTMLElement;
  message: HTMLElement;
  status: HTMLElement;
}

export function buildSessionView(
  root: HTMLElement,
  controller: SessionController,
  config: ServiceConfig,
): ViewHandles {
  const [lo, hi] = config.raw_scale;
  root.innerHTML = `
    <div id="status"></div>
    <div id="progress"></div>
    <div id="countdown" hidden></div>
    <div id="player" hidden>
      <video id="video" controls></video>
      <audio id="audio"></audio>
      <button id="play" type="button">Play</button>
    </div>
    <form id="rating-form" hidden>
      <label>Quality score
        <input id="score" type="range" min="${lo}" max="${hi}" step="0.1" value="${((lo + hi) / 2).toFixed(1)}">
        <output id="score-value"></output>
      </label>
      <fieldset id="distortions"><legend>Observed distortions</legend></fieldset>
      <button id="submit" type="submit" disabled>Submit rating</button>
    </form>
    <div id="message" role="alert"></div>
  `;

  const view: ViewHandles = {
    root,
    video: root.querySelector("#video") as HTMLVideoElement,
    audio: root.querySelector("#audio") as HTMLAudioElement,
    playButton: root.querySelector("#play") as HTMLButtonElement,
    slider: root.querySelector("#score") as HTMLInputElement,
    sliderValue: root.querySelector("#score-value") as HTMLElement,
    checkboxes: [],
    submitButton: root.querySelector("#submit") as HTMLButtonElement,
    progress: root.querySelector("#progress") as HTMLElement,
    countdown: root.querySelector("#countdown") as HTMLElement,
    message: root.querySelector("#message") as HTMLElement,
    status: root.querySelector("#status") as HTMLElement,
  };

  const fieldset = root.querySelector("#distortions") as HTMLElement;
  for (const [index, label] of config.distortion_labels.entries()) {
    const wrapper = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.dataset.index = String(index);
    wrapper.append(box, document.createTextNode(` ${label}`));
    fieldset.append(wrapper);
    view.checkboxes.push(box);
  }

  view.sliderValue.textContent = view.slider.value;
  view.slider.addEventListener("input", () => {
    view.sliderValue.textContent = view.slider.value;
  });

  // playback must start before the submit control unlocks
  view.video.addEventListener("play", () => {
    controller.markPlaybackStarted();
    view.submitButton.disabled = !controller.canSubmit();
  });
  view.playButton.addEventListener("click", () => {
    void view.video.play();
    void view.audio.play();
    // happy-dom and some browsers resolve play() without firing the event
    view.video.dispatchEvent(new Event("play"));
  });

  const form = root.querySelector("#rating-form") as HTMLFormElement;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (!controller.canSubmit()) {
      return;
    }
    const bits = view.checkboxes.map((box) => (box.checked ? 1 : 0));
    void controller.submit(Number(view.slider.value), bits);
  });

  let activeCountdown: Countdown | null = null;
  controller.onChange((state) => render(view, state, config, (countdown) => {
    activeCountdown?.stop();
    activeCountdown = countdown;
  }));
  return view;
}

function render(
  view: ViewHandles,
  state: SessionState,
  config: ServiceConfig,
  swapCountdown: (countdown: Countdown | null) => void,
): void {
  const player = view.root.querySelector("#player") as HTMLElement;
  const form = view.root.querySelector("#rating-form") as HTMLElement;
  view.message.textContent = state.message ?? "";
  view.progress.textContent = state.total
    ? `Stimulus ${Math.min(state.position + 1, state.total)} of ${state.total}`
    : "";
  view.status.textContent = statusLine(state, config);

  const showPlayer = state.phase === "awaiting-playback" || state.phase === "rating" || state.phase === "submitting";
  player.hidden = !showPlayer;
  form.hidden = !showPlayer;
  view.submitButton.disabled = state.phase !== "rating";

  if (showPlayer && state.stimulus) {
    if (view.video.getAttribute("src") !== state.stimulus.video_url) {
      view.video.setAttribute("src", state.stimulus.video_url);
      view.audio.setAttribute("src", state.stimulus.audio_url);
      for (const box of view.checkboxes) {
        box.checked = false; // fresh stimulus, fresh form
      }
    }
  }

  if (state.phase === "break" && state.breakRemainingS !== null) {
    view.countdown.hidden = false;
    const countdown = new Countdown(
      state.breakRemainingS,
      (display) => {
        view.countdown.textContent = `Mandatory break: ${display} remaining`;
      },
      () => {
        view.countdown.textContent = "Break over. You may start the session.";
      },
    );
    countdown.start();
    swapCountdown(countdown);
  } else {
    view.countdown.hidden = true;
    swapCountdown(null);
  }
}

function statusLine(state: SessionState, config: ServiceConfig): string {
  switch (state.phase) {
    case "completed":
      return `Session complete. Sessions finished today: ${state.dailySessionsUsed} of ${config.daily_cap}.`;
    case "capped":
      return "Daily session limit reached.";
    case "break":
      return "Break required before the next session.";
    case "blocked":
      return "Session unavailable.";
    case "error":
      return "Something went wrong.";
    case "loading":
      return "Loading...";
    default:
      return `Session ${state.sessionId}`;
  }
}
