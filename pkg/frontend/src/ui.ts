/**
 * DOM wiring for the operator console. Every displayed value comes from the
 * latest server frame; the render loop runs on requestAnimationFrame and the
 * input model ticks alongside it.
 */

import { VibrationAudio } from "./audio.js";
import { ConnectionStatus, SessionClient } from "./client.js";
import { gaugeView } from "./gauge.js";
import { InputModel } from "./input.js";
import { EventFrame, StateFrame } from "./protocol.js";

const MODE_LABELS: Record<string, string> = {
  nofeedback: "Manual (no feedback)",
  feedback: "Manual + vibrotactile",
  manual: "Manual (shared control)",
  armed: "Armed - autonomous ready",
  auto: "Autonomous grasp",
};

const STAGE_LABELS = ["idle", "stage 1: fast close", "stage 2: re-ramp", "stage 3: grip PI", "holding"];

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

export class ConsoleUi {
  private readonly input = new InputModel();
  private readonly audio = new VibrationAudio();
  private lastTick = performance.now();

  private readonly banner = el<HTMLDivElement>("banner");
  private readonly modeLabel = el<HTMLSpanElement>("mode");
  private readonly stageLabel = el<HTMLSpanElement>("stage");
  private readonly led = el<HTMLSpanElement>("led");
  private readonly liftCount = el<HTMLSpanElement>("lifts");
  private readonly trialClock = el<HTMLSpanElement>("trial-clock");
  private readonly aperture = el<HTMLDivElement>("aperture-fill");
  private readonly apertureLabel = el<HTMLSpanElement>("aperture-label");
  private readonly needle = el<HTMLDivElement>("needle");
  private readonly gaugeEl = el<HTMLDivElement>("gauge");
  private readonly loadLabel = el<HTMLSpanElement>("load-label");
  private readonly envFill = el<HTMLDivElement>("env-fill");
  private readonly airborne = el<HTMLSpanElement>("airborne");
  private readonly broken = el<HTMLSpanElement>("broken");
  private readonly feed = el<HTMLUListElement>("event-feed");
  private readonly controls = el<HTMLFieldSetElement>("controls");

  constructor(private readonly client: SessionClient) {}

  bind(): void {
    const flex = el<HTMLInputElement>("flex-slider");
    const ext = el<HTMLInputElement>("ext-slider");
    flex.addEventListener("input", () => (this.input.flexSlider = Number(flex.value)));
    ext.addEventListener("input", () => (this.input.extSlider = Number(ext.value)));

    const lift = el<HTMLInputElement>("lift-toggle");
    lift.addEventListener("change", () => (this.input.lift = lift.checked));

    const button = el<HTMLButtonElement>("override");
    button.addEventListener("pointerdown", () => {
      this.input.buttonHeld = true;
      this.pushInput();
      this.client.flushInput();
    });
    button.addEventListener("pointerup", () => (this.input.buttonHeld = false));
    button.addEventListener("pointerleave", () => (this.input.buttonHeld = false));

    const audio = el<HTMLInputElement>("audio-toggle");
    audio.addEventListener("change", () => this.audio.toggle(audio.checked));

    window.addEventListener("keydown", (ev) => this.handleKey(ev, true));
    window.addEventListener("keyup", (ev) => this.handleKey(ev, false));

    this.client.connect();
    requestAnimationFrame(() => this.frame());
  }

  onStatus(status: ConnectionStatus): void {
    this.banner.dataset.status = status;
    this.banner.textContent =
      status === "open"
        ? "connected"
        : status === "connecting"
          ? "connecting..."
          : "disconnected - inputs locked";
    this.controls.disabled = status !== "open";
  }

  onEvent(frame: EventFrame): void {
    const li = document.createElement("li");
    li.textContent = `${frame.t.toFixed(2)} s  ${frame.name}`;
    this.feed.prepend(li);
    while (this.feed.childElementCount > 30) this.feed.lastElementChild?.remove();
  }

  private handleKey(ev: KeyboardEvent, down: boolean): void {
    if (ev.repeat) return;
    switch (ev.key.toLowerCase()) {
      case "f":
        this.input.setKey("flex", down);
        break;
      case "e":
        this.input.setKey("ext", down);
        break;
      case "l":
        if (down) {
          this.input.lift = !this.input.lift;
          el<HTMLInputElement>("lift-toggle").checked = this.input.lift;
        }
        break;
      case "b":
        this.input.buttonHeld = down;
        if (down) this.client.flushInput();
        break;
      default:
        return;
    }
    ev.preventDefault();
    this.pushInput();
  }

  private pushInput(): void {
    this.client.setInput(this.input.current());
  }

  private frame(): void {
    const now = performance.now();
    const dt = Math.min((now - this.lastTick) / 1000, 0.1);
    this.lastTick = now;
    this.input.tick(dt);
    this.pushInput();
    const state = this.client.latest;
    if (state) this.render(state);
    requestAnimationFrame(() => this.frame());
  }

  private render(s: StateFrame): void {
    this.modeLabel.textContent = MODE_LABELS[s.mode] ?? s.mode;
    this.stageLabel.textContent = STAGE_LABELS[s.stage] ?? String(s.stage);
    this.led.dataset.on = String(s.led);
    this.liftCount.textContent = String(s.lifts);
    this.trialClock.textContent =
      s.trial_clock >= 0 ? `${s.trial_clock.toFixed(1)} s` : `break ${(-s.trial_clock).toFixed(0)} s`;

    this.aperture.style.width = `${Math.min(Math.max(s.aperture_pct, 0), 100)}%`;
    this.apertureLabel.textContent = `${s.aperture_pct.toFixed(1)} % closed`;

    const view = gaugeView(s.L);
    this.needle.style.left = `${view.needle * 100}%`;
    this.gaugeEl.dataset.zone = view.zone;
    this.loadLabel.textContent = `${s.L.toFixed(2)} V`;

    this.envFill.style.width = `${Math.min(Math.max(s.nu / 10, 0), 1) * 100}%`;
    this.audio.update(s.nu);

    this.airborne.dataset.on = String(s.airborne);
    this.broken.dataset.on = String(s.broken);
  }
}
