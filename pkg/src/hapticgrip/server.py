"""Live session server: one operator drives the simulation over a WebSocket.

Wire protocol (one JSON object per text frame):
  client -> server:
    {"type": "input", "flex": f, "ext": e, "lift": l, "button": b}
    {"type": "reset"}
    {"type": "configure", "group": "...", "seed": n}
  server -> client:
    {"type": "state", t, mode, stage, aperture_pct, L, nu, led, airborne,
     broken, lifts, trial_clock}
    {"type": "event", "name": ..., "t": ...}
    {"type": "error", "msg": ...}

The simulation advances in wall-clock time (optionally scaled by
``config.speed``) at the plant tick internally; state frames are decimated
to ~60 Hz. Telemetry and the applied per-tick input stream persist to the
output directory in the same formats the batch harness uses, so a live run
can be replayed in batch.
"""

from __future__ import annotations

import asyncio
import csv
import json
import math
import os

import websockets

from .arbiter import SharedMode
from .config import ExperimentConfig, parse_group
from .harness import TrialDriver
from .operator_io import OperatorInput
from .session import SimulationSession
from .telemetry import MODE_NAMES

FRAME_HZ = 60.0
MAX_BATCH_TICKS = 200

INPUT_COLUMNS = ["trial", "tick", "flex", "ext", "lift", "button"]


class InputRecorder:
    """Applied per-tick inputs, persisted as CSV for batch replay."""

    def __init__(self):
        self.rows: list[tuple[int, int, float, float, float, int]] = []

    def record(self, trial: int, tick: int, inp: OperatorInput) -> None:
        self.rows.append((trial, tick, inp.flex, inp.ext, inp.lift, int(inp.button)))

    def write(self, path: str) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(INPUT_COLUMNS)
            for trial, tick, flex, ext, lift, button in self.rows:
                w.writerow([trial, tick, repr(flex), repr(ext), repr(lift), button])


def read_inputs_csv(path: str) -> dict[int, list[OperatorInput]]:
    """Parse a recorded input stream back into per-trial tick inputs."""
    out: dict[int, list[OperatorInput]] = {}
    with open(path, "r", newline="", encoding="utf-8") as fh:
        r = csv.DictReader(fh)
        for row in r:
            inp = OperatorInput(
                flex=float(row["flex"]),
                ext=float(row["ext"]),
                lift=float(row["lift"]),
                button=row["button"] == "1",
            )
            out.setdefault(int(row["trial"]), []).append(inp)
    return out


def _parse_input(msg: dict) -> OperatorInput:
    try:
        flex = float(msg["flex"])
        ext = float(msg["ext"])
        lift = float(msg["lift"])
        button = bool(msg.get("button", False))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"bad input frame: {exc}") from exc
    for name, v in (("flex", flex), ("ext", ext), ("lift", lift)):
        if not math.isfinite(v) or not (0.0 <= v <= 1.0):
            raise ValueError(f"{name} must be finite in [0, 1], got {v}")
    return OperatorInput(flex=flex, ext=ext, lift=lift, button=button)


class LiveServer:
    """Single-operator live session bound to one experiment config."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.client = None
        self._build_session()
        self._frames_sent = 0
        self._stopped = asyncio.Event()

    def _build_session(self) -> None:
        cfg = self.config
        self.session = SimulationSession(cfg.group, cfg.plant, cfg.controller, cfg.vibration)
        self.driver = TrialDriver(self.session, cfg.schedule)
        self.trial_index = 0
        self.total_lifts = 0
        self.recorder = InputRecorder()
        self.pending = OperatorInput()
        self.break_left = 0.0
        self.complete = False
        self._saved_trials: list[tuple[int, object]] = []
        self._start_next_trial()

    def _start_next_trial(self) -> None:
        self.trial_index += 1
        self.driver.start()

    # -- session stepping ------------------------------------------------

    def _tick_once(self) -> list[dict]:
        """Advance one tick; returns event frames produced by that tick."""
        tel = self.session.telemetry
        tick = self.driver.ticks_done
        self.recorder.record(self.trial_index, tick, self.pending)
        self.driver.tick(self.pending)
        frames = []
        idx = len(tel.t) - 1
        if idx in tel.events:
            for name in tel.events[idx].split(";"):
                frames.append({"type": "event", "name": name, "t": tel.t[idx]})
        if not self.driver.running:
            frames.extend(self._end_trial())
        return frames

    def _end_trial(self) -> list[dict]:
        self.driver.finish()
        self.total_lifts += self.session.lifts
        self._saved_trials.append((self.trial_index, self.session.telemetry))
        frames = [{"type": "event", "name": "trial_complete", "t": self.session.clock}]
        if self.trial_index >= self.config.schedule.trials:
            self.complete = True
            frames.append({"type": "event", "name": "experiment_complete", "t": self.session.clock})
            self.persist()
        else:
            self.break_left = self.config.schedule.break_s
        return frames

    def state_frame(self) -> dict:
        s = self.session
        plant = s.plant
        mode = s.arbiter.mode
        if mode.shared is None:
            mode_name = MODE_NAMES[0] if not mode.feedback_enabled else MODE_NAMES[1]
        else:
            mode_name = mode.shared.value
        obs = s.observation()
        if self.break_left > 0:
            trial_clock = -self.break_left
        else:
            remaining = (self.driver.ticks_per_trial - self.driver.ticks_done) * s.pparams.tick
            trial_clock = max(0.0, remaining)
        return {
            "type": "state",
            "t": s.clock,
            "mode": mode_name,
            "stage": s.arbiter.auto.stage.value,
            "aperture_pct": 100.0 * (1.0 - plant.aperture / s.pparams.max_aperture),
            "L": plant.load_voltage,
            "nu": obs.nu if mode.feedback_enabled else (s.vparams.gain if obs.pulse_felt else 0.0),
            "led": mode.led,
            "airborne": plant.airborne,
            "broken": plant.broken,
            "lifts": self.total_lifts + (s.lifts if not self.complete else 0),
            "trial_clock": trial_clock,
        }

    def persist(self) -> None:
        out = self.config.out_dir
        os.makedirs(out, exist_ok=True)
        tdir = os.path.join(out, "telemetry")
        os.makedirs(tdir, exist_ok=True)
        session_id = f"{self.config.group.value}-live"
        manifest = {
            "seed": self.config.seed,
            "group": self.config.group.value,
            "dt": self.session.pparams.tick,
            "live": True,
            "sessions": {session_id: {"group": self.config.group.value, "trials": []}},
        }
        trials = list(self._saved_trials)
        if self.driver.ticks_done > 0 and not self.complete:
            trials.append((self.trial_index, self.session.telemetry))
        for trial_idx, tel in trials:
            fname = f"{session_id}_trial{trial_idx}.csv"
            tel.to_csv(os.path.join(tdir, fname))
            manifest["sessions"][session_id]["trials"].append(fname)
        with open(os.path.join(out, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
        self.recorder.write(os.path.join(out, "inputs.csv"))

    # -- network ---------------------------------------------------------

    async def handle_message(self, raw: str) -> list[dict]:
        try:
            msg = json.loads(raw)
            if not isinstance(msg, dict) or "type" not in msg:
                raise ValueError("frame must be a JSON object with a 'type'")
            kind = msg["type"]
            if kind == "input":
                self.pending = _parse_input(msg)
                return []
            if kind == "reset":
                self._build_session()
                return [{"type": "event", "name": "reset", "t": 0.0}]
            if kind == "configure":
                if "group" in msg:
                    self.config.group = parse_group(str(msg["group"]))
                if "seed" in msg:
                    self.config.seed = int(msg["seed"])
                self._build_session()
                return [{"type": "event", "name": "configured", "t": 0.0}]
            raise ValueError(f"unknown frame type {kind!r}")
        except ValueError as exc:
            return [{"type": "error", "msg": str(exc)}]

    async def _sender(self, ws, frames: list[dict]) -> None:
        for frame in frames:
            await ws.send(json.dumps(frame))

    async def run_client(self, ws) -> None:
        if self.client is not None:
            await ws.send(json.dumps({"type": "error", "msg": "session already has an operator"}))
            await ws.close()
            return
        self.client = ws
        recv_task = asyncio.ensure_future(ws.recv())
        try:
            tick_s = self.session.pparams.tick / self.config.speed
            frame_interval = 1.0 / FRAME_HZ
            loop = asyncio.get_running_loop()
            next_tick = loop.time()
            next_frame = loop.time()
            break_deadline = None
            while True:
                now = loop.time()
                if recv_task.done():
                    try:
                        raw = recv_task.result()
                    except websockets.ConnectionClosed:
                        break
                    frames = await self.handle_message(raw)
                    await self._sender(ws, frames)
                    recv_task = asyncio.ensure_future(ws.recv())
                    next_tick = min(next_tick, loop.time() + tick_s)

                if self.break_left > 0:
                    if break_deadline is None:
                        break_deadline = now + self.break_left / self.config.speed
                    elif now >= break_deadline:
                        self.break_left = 0.0
                        break_deadline = None
                        self.session.skip_time(self.config.schedule.break_s)
                        self._start_next_trial()
                        next_tick = now
                    else:
                        self.break_left = max(0.0, (break_deadline - now) * self.config.speed)
                elif not self.complete and now >= next_tick:
                    n_due = int((now - next_tick) / tick_s) + 1
                    for _ in range(min(n_due, MAX_BATCH_TICKS)):
                        frames = self._tick_once()
                        if frames:
                            await self._sender(ws, frames)
                        if self.complete or self.break_left > 0:
                            break
                    next_tick += n_due * tick_s
                    if next_tick < now - 1.0:  # fell far behind: drop the backlog
                        next_tick = now

                if now >= next_frame:
                    await ws.send(json.dumps(self.state_frame()))
                    next_frame = now + frame_interval

                deadlines = [next_frame]
                if self.break_left > 0 and break_deadline is not None:
                    deadlines.append(break_deadline)
                elif not self.complete:
                    deadlines.append(next_tick)
                sleep_for = min(deadlines) - loop.time()
                await asyncio.sleep(min(max(sleep_for, 0.0), 0.05))
        except websockets.ConnectionClosed:
            pass
        finally:
            if not recv_task.done():
                recv_task.cancel()
            self.client = None
            # safety stop: one zero-input tick, then pause until reconnect
            self.pending = OperatorInput()
            if not self.complete and self.driver.running and self.break_left == 0.0:
                self._tick_once()
            self.persist()

    async def serve_forever(self) -> None:
        async def handler(ws):
            await self.run_client(ws)

        try:
            async with websockets.serve(handler, self.config.host, self.config.port):
                await self._stopped.wait()
        except OSError as exc:
            raise PortInUseError(
                f"cannot listen on {self.config.host}:{self.config.port}: {exc}"
            ) from exc

    def stop(self) -> None:
        self._stopped.set()


class PortInUseError(Exception):
    pass


def serve(config: ExperimentConfig) -> None:
    """Blocking entry point for the CLI."""
    server = LiveServer(config)
    asyncio.run(server.serve_forever())
