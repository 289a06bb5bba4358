/**
 * Optional audio cue for the vibration envelope: a fixed carrier whose gain
 * follows the envelope at reduced fidelity. A cue, not a measurement; off by
 * default and silently unavailable outside the browser.
 */

export const CARRIER_HZ = 250;
const MAX_GAIN = 0.12; // keep the cue quiet; envelope is 0..10 V

export class VibrationAudio {
  private ctx: AudioContext | null = null;
  private gain: GainNode | null = null;
  enabled = false;

  toggle(on: boolean): void {
    this.enabled = on;
    if (on && this.ctx === null && typeof AudioContext !== "undefined") {
      this.ctx = new AudioContext();
      const osc = this.ctx.createOscillator();
      osc.frequency.value = CARRIER_HZ;
      this.gain = this.ctx.createGain();
      this.gain.gain.value = 0;
      osc.connect(this.gain).connect(this.ctx.destination);
      osc.start();
    }
    if (!on && this.gain) this.gain.gain.value = 0;
    if (on) void this.ctx?.resume();
  }

  /** Follow the envelope (volts, 0..10) with a smoothed gain ramp. */
  update(envelopeVolts: number): void {
    if (!this.enabled || !this.gain || !this.ctx) return;
    const target = Math.min(Math.max(envelopeVolts / 10, 0), 1) * MAX_GAIN;
    this.gain.gain.setTargetAtTime(target, this.ctx.currentTime, 0.02);
  }
}
