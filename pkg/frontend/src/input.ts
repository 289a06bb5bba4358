/**
 * Operator input model: sliders set activations directly; held keys ramp an
 * activation analog-style, since grasping needs smooth modulation that
 * binary keys cannot give. All values clamp into [0, 1] before they can
 * reach the wire.
 */

import { InputState, clamp01 } from "./protocol.js";

export const RAMP_UP_S = 0.8; // hold-to-ramp time from 0 to full activation
export const RAMP_DOWN_S = 0.25;

export interface KeyRampState {
  value: number;
  held: boolean;
}

/** Advance one ramp by dt: rises toward 1 while held, falls to 0 otherwise. */
export function stepRamp(state: KeyRampState, dt: number): KeyRampState {
  const rate = state.held ? dt / RAMP_UP_S : -dt / RAMP_DOWN_S;
  return { value: clamp01(state.value + rate), held: state.held };
}

export class InputModel {
  flexSlider = 0;
  extSlider = 0;
  flexRamp: KeyRampState = { value: 0, held: false };
  extRamp: KeyRampState = { value: 0, held: false };
  lift = false;
  buttonHeld = false;

  setKey(which: "flex" | "ext", held: boolean): void {
    if (which === "flex") this.flexRamp = { ...this.flexRamp, held };
    else this.extRamp = { ...this.extRamp, held };
  }

  tick(dt: number): void {
    this.flexRamp = stepRamp(this.flexRamp, dt);
    this.extRamp = stepRamp(this.extRamp, dt);
  }

  /** Sliders and key ramps combine by maximum; result is always in range. */
  current(): InputState {
    return {
      flex: clamp01(Math.max(this.flexSlider, this.flexRamp.value)),
      ext: clamp01(Math.max(this.extSlider, this.extRamp.value)),
      lift: this.lift ? 1 : 0,
      button: this.buttonHeld,
    };
  }
}
