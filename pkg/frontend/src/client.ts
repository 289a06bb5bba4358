/**
 * Session client: one WebSocket to the simulation server, a frame buffer
 * holding only the latest state, an event feed, and an input pump.
 *
 * The render loop reads `latest` on its own schedule; message handling never
 * blocks on rendering. Input frames go out on a fixed pump interval (>= 30
 * Hz) whenever the input differs from the last one sent, so held ramps
 * stream continuously but an idle console stays quiet.
 */

import {
  ErrorFrame,
  EventFrame,
  InputState,
  StateFrame,
  ZERO_INPUT,
  encodeInputFrame,
  inputsEqual,
  parseServerFrame,
  sanitizeInput,
} from "./protocol.js";

export type ConnectionStatus = "connecting" | "open" | "closed";

/** Structural subset of a WebSocket that both browsers and `ws` satisfy.
 * Handler params are `any` because the DOM and `ws` event types differ in
 * ways that only matter to the type checker. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  /* eslint-disable @typescript-eslint/no-explicit-any */
  onopen: ((ev: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev: any) => void) | null;
  onerror: ((ev: any) => void) | null;
  /* eslint-enable @typescript-eslint/no-explicit-any */
}

export type SocketFactory = (url: string) => SocketLike;

export const INPUT_PUMP_HZ = 40;
export const EVENT_FEED_LIMIT = 200;

export interface ClientHooks {
  onState?: (frame: StateFrame) => void;
  onEvent?: (frame: EventFrame) => void;
  onError?: (frame: ErrorFrame) => void;
  onStatus?: (status: ConnectionStatus) => void;
}

export class SessionClient {
  status: ConnectionStatus = "connecting";
  latest: StateFrame | null = null;
  events: EventFrame[] = [];
  errors: ErrorFrame[] = [];
  framesReceived = 0;
  inputsSent = 0;

  private socket: SocketLike | null = null;
  private input: InputState = { ...ZERO_INPUT };
  private lastSent: InputState | null = null;
  private pump: ReturnType<typeof setInterval> | null = null;

  constructor(
    private readonly url: string,
    private readonly makeSocket: SocketFactory,
    private readonly hooks: ClientHooks = {},
  ) {}

  connect(): void {
    this.setStatus("connecting");
    const socket = this.makeSocket(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.setStatus("open");
      this.lastSent = null; // announce current input on (re)connect
      this.startPump();
    };
    socket.onmessage = (ev) => {
      const frame = parseServerFrame(String(ev.data));
      if (!frame) return;
      if (frame.type === "state") {
        this.latest = frame;
        this.framesReceived += 1;
        this.hooks.onState?.(frame);
      } else if (frame.type === "event") {
        this.events.push(frame);
        if (this.events.length > EVENT_FEED_LIMIT) this.events.shift();
        this.hooks.onEvent?.(frame);
      } else {
        this.errors.push(frame);
        this.hooks.onError?.(frame);
      }
    };
    socket.onclose = () => {
      this.stopPump();
      this.setStatus("closed");
    };
    socket.onerror = () => {
      // onclose follows; nothing to do beyond surfacing the banner
    };
  }

  close(): void {
    this.stopPump();
    this.socket?.close();
  }

  /** Update the intended input; the pump sends it on its next beat. */
  setInput(input: InputState): void {
    this.input = sanitizeInput(input);
  }

  /** Send the current input immediately (used for taps like the button). */
  flushInput(): void {
    this.sendIfChanged(true);
  }

  sendReset(): void {
    if (this.status === "open") this.socket?.send(JSON.stringify({ type: "reset" }));
  }

  private setStatus(status: ConnectionStatus): void {
    this.status = status;
    this.hooks.onStatus?.(status);
  }

  private startPump(): void {
    this.stopPump();
    this.pump = setInterval(() => this.sendIfChanged(false), 1000 / INPUT_PUMP_HZ);
  }

  private stopPump(): void {
    if (this.pump !== null) {
      clearInterval(this.pump);
      this.pump = null;
    }
  }

  private sendIfChanged(force: boolean): void {
    if (this.status !== "open" || this.socket === null) return;
    if (!force && this.lastSent !== null && inputsEqual(this.input, this.lastSent)) return;
    this.socket.send(encodeInputFrame(this.input));
    this.lastSent = { ...this.input };
    this.inputsSent += 1;
  }
}
