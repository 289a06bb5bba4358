/**
 * Wire protocol shared with the session server: one JSON object per text
 * frame. The console renders only what arrives in state frames; nothing is
 * simulated client-side.
 */

export interface StateFrame {
  type: "state";
  t: number;
  mode: string; // "nofeedback" | "feedback" | "manual" | "armed" | "auto"
  stage: number; // 0 idle .. 3 PI, 4 holding
  aperture_pct: number; // percent closed
  L: number; // load-cell volts
  nu: number; // vibration envelope volts
  led: boolean;
  airborne: boolean;
  broken: boolean;
  lifts: number;
  trial_clock: number; // seconds left in trial; negative while on break
}

export interface EventFrame {
  type: "event";
  name: string;
  t: number;
}

export interface ErrorFrame {
  type: "error";
  msg: string;
}

export type ServerFrame = StateFrame | EventFrame | ErrorFrame;

export interface InputState {
  flex: number;
  ext: number;
  lift: number;
  button: boolean;
}

export const ZERO_INPUT: InputState = { flex: 0, ext: 0, lift: 0, button: false };

const STATE_NUMBERS = ["t", "stage", "aperture_pct", "L", "nu", "lifts", "trial_clock"] as const;
const STATE_BOOLS = ["led", "airborne", "broken"] as const;

/** Parse and validate a server frame; returns null for anything malformed. */
export function parseServerFrame(raw: string): ServerFrame | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const obj = data as Record<string, unknown>;
  switch (obj.type) {
    case "state": {
      for (const key of STATE_NUMBERS) {
        if (typeof obj[key] !== "number" || !Number.isFinite(obj[key] as number)) return null;
      }
      for (const key of STATE_BOOLS) {
        if (typeof obj[key] !== "boolean") return null;
      }
      if (typeof obj.mode !== "string") return null;
      return obj as unknown as StateFrame;
    }
    case "event":
      if (typeof obj.name !== "string" || typeof obj.t !== "number") return null;
      return obj as unknown as EventFrame;
    case "error":
      if (typeof obj.msg !== "string") return null;
      return obj as unknown as ErrorFrame;
    default:
      return null;
  }
}

/** Clamp a raw value into [0, 1]; non-finite collapses to 0. */
export function clamp01(x: number): number {
  if (!Number.isFinite(x)) return 0;
  return Math.min(Math.max(x, 0), 1);
}

/** Sanitize an input state so no out-of-range value can reach the wire. */
export function sanitizeInput(input: InputState): InputState {
  return {
    flex: clamp01(input.flex),
    ext: clamp01(input.ext),
    lift: clamp01(input.lift),
    button: Boolean(input.button),
  };
}

/** Serialize an input frame (values already sanitized). */
export function encodeInputFrame(input: InputState): string {
  const safe = sanitizeInput(input);
  return JSON.stringify({
    type: "input",
    flex: safe.flex,
    ext: safe.ext,
    lift: safe.lift,
    button: safe.button,
  });
}

export function inputsEqual(a: InputState, b: InputState): boolean {
  return a.flex === b.flex && a.ext === b.ext && a.lift === b.lift && a.button === b.button;
}
