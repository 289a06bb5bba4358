"""Experiment protocol: trials, grasp-attempt segmentation, task metrics.

A grasp attempt opens when the load voltage crosses below the contact
threshold and closes after the load stays above it for a hysteresis window,
on a wall break, or at trial end. Per attempt, the hundred smallest load
samples during contact are averaged and compared to the 3--4 V safe grasping
margin; a lift counts when a continuous airborne episode reaches three
seconds.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .arbiter import Group
from .operator_io import ZERO_INPUT, tracking_assessment
from .plant import PlantParams
from .policies import PolicyParams, ScriptedOperator, synth_tracking_signal
from .session import LIFT_SUCCESS_S, SimulationSession
from .telemetry import Telemetry

CONTACT_V = 4.3
MARGIN_LOW_V = 3.0
MARGIN_HIGH_V = 4.0
HYSTERESIS_S = 0.1
MIN_SAMPLES = 100
TRACKING_LEVELS = (0.125, 0.25, 0.375)
TRACKING_HOLD_S = 5.0


class AttemptMode(Enum):
    NO_FEEDBACK = "NoFeedback"
    FEEDBACK = "Feedback"
    AUTONOMOUS = "Autonomous"


_MODE_CODE_TO_ATTEMPT = {
    0: AttemptMode.NO_FEEDBACK,
    1: AttemptMode.FEEDBACK,
    2: AttemptMode.FEEDBACK,  # shared-control manual operation
    3: AttemptMode.AUTONOMOUS,
    4: AttemptMode.AUTONOMOUS,
}


@dataclass(frozen=True, slots=True)
class AttemptRecord:
    start_t: float
    end_t: float
    min100_mean: float
    in_margin: bool
    lifted: bool
    airborne_duration: float
    broke: bool
    mode: AttemptMode


@dataclass(slots=True)
class TrialRecord:
    trial_index: int
    attempts: list[AttemptRecord] = field(default_factory=list)

    @property
    def lifts(self) -> int:
        return sum(1 for a in self.attempts if a.lifted)

    @property
    def breaks(self) -> int:
        return sum(1 for a in self.attempts if a.broke)


@dataclass(frozen=True, slots=True)
class Schedule:
    """Trial plan: count, trial length, inter-trial break, break-reset delay."""

    trials: int = 7
    trial_s: float = 60.0
    break_s: float = 30.0
    reset_delay_s: float = 1.0

    def __post_init__(self):
        if self.trials < 1 or self.trial_s <= 0 or self.break_s < 0 or self.reset_delay_s < 0:
            raise ValueError("invalid schedule")


def _resolve_dt(telem: Telemetry, t: np.ndarray) -> float:
    if telem.dt:
        return telem.dt
    if t.size > 1:
        return float(t[1] - t[0])
    raise ValueError("cannot resolve telemetry tick length")


def find_attempt_spans(telem: Telemetry, contact_v: float = CONTACT_V,
                       hysteresis_s: float = HYSTERESIS_S) -> list[tuple[int, int]]:
    """Locate attempt windows as half-open tick index spans [start, end).

    Opens on a downward crossing of the contact voltage; contact flicker
    shorter than the hysteresis merges into the enclosing attempt; a break
    tick closes the attempt immediately. After a break the load stays low
    until the object is swapped, so the next attempt requires a fresh
    crossing.
    """
    cols = telem.arrays()
    return _spans_from_arrays(cols, _resolve_dt(telem, cols["t"]), contact_v, hysteresis_s)


def _spans_from_arrays(cols: dict, dt: float, contact_v: float,
                       hysteresis_s: float) -> list[tuple[int, int]]:
    t = cols["t"]
    if t.size == 0:
        return []
    if np.any(np.diff(t) <= 0):
        raise ValueError("telemetry time must be strictly increasing")
    below = cols["load"] < contact_v
    broken = cols["broken"]
    gap_ticks = max(1, int(round(hysteresis_s / dt)))

    spans: list[tuple[int, int]] = []
    n = t.size
    i = 0
    while i < n:
        if not below[i]:
            i += 1
            continue
        start = i
        end = None
        j = i
        gap = 0
        last_contact = i
        while j < n:
            if broken[j] and (j == 0 or not broken[j - 1]):
                end = j + 1
                break
            if below[j]:
                gap = 0
                last_contact = j
            else:
                gap += 1
                if gap >= gap_ticks:
                    end = last_contact + 1
                    break
            j += 1
        if end is None:
            # trial ended with contact (or inside the hysteresis window)
            end = last_contact + 1
        spans.append((start, end))
        # skip any residual contact (e.g. frozen load after a break); a new
        # attempt needs the load to rise above the threshold first
        i = max(end, j)
        while i < n and below[i]:
            i += 1
    return spans


def _metrics_from_arrays(span: tuple[int, int], cols: dict, dt: float,
                         contact_v: float) -> AttemptRecord:
    start, end = span
    if end <= start:
        raise ValueError("empty attempt span")
    t = cols["t"]
    load = cols["load"][start:end]
    contact_vals = load[load < contact_v]
    if contact_vals.size == 0:
        raise ValueError("attempt span has no contact samples")
    k = min(MIN_SAMPLES, contact_vals.size)
    min100 = float(np.sort(contact_vals)[:k].mean())

    air = cols["airborne"][start:end]
    best_run = 0
    run = 0
    for flag in air:
        if flag:
            run += 1
            if run > best_run:
                best_run = run
        else:
            run = 0
    air_duration = best_run * dt
    lifted = air_duration >= LIFT_SUCCESS_S - 1e-9

    broke = bool(cols["broken"][start:end].any())
    mode = _MODE_CODE_TO_ATTEMPT[int(cols["mode"][start])]
    return AttemptRecord(
        start_t=float(t[start]),
        end_t=float(t[end - 1] + dt),
        min100_mean=min100,
        in_margin=MARGIN_LOW_V <= min100 <= MARGIN_HIGH_V,
        lifted=lifted,
        airborne_duration=air_duration,
        broke=broke,
        mode=mode,
    )


def attempt_metrics(span: tuple[int, int], telem: Telemetry,
                    contact_v: float = CONTACT_V) -> AttemptRecord:
    """Complete one attempt record from its tick span."""
    cols = telem.arrays()
    return _metrics_from_arrays(span, cols, _resolve_dt(telem, cols["t"]), contact_v)


def segment_attempts(telem: Telemetry) -> list[AttemptRecord]:
    """Segment a trial's telemetry into completed attempt records."""
    cols = telem.arrays()
    dt = _resolve_dt(telem, cols["t"])
    spans = _spans_from_arrays(cols, dt, CONTACT_V, HYSTERESIS_S)
    return [_metrics_from_arrays(s, cols, dt, CONTACT_V) for s in spans]


class TrialDriver:
    """Tick-level trial execution shared by the batch harness and live server.

    Wraps one session with the trial schedule's tick budget and the
    broken-object swap (the wall is re-erected ``reset_delay_s`` after a
    break, once per break).
    """

    def __init__(self, session: SimulationSession, schedule: Schedule = Schedule()):
        self.session = session
        self.schedule = schedule
        dt = session.pparams.tick
        self.ticks_per_trial = int(round(schedule.trial_s / dt))
        self._reset_ticks = int(round(schedule.reset_delay_s / dt))
        self._broken_since: int | None = None
        self.ticks_done = 0

    def start(self) -> None:
        self.session.start_trial()
        self._broken_since = None
        self.ticks_done = 0

    @property
    def running(self) -> bool:
        return self.ticks_done < self.ticks_per_trial

    def tick(self, inp) -> bool:
        """Advance one tick; returns True while the trial has ticks left."""
        if not self.running:
            return False
        if self.session.plant.broken:
            if self._broken_since is None:
                self._broken_since = self.ticks_done
            elif self.ticks_done - self._broken_since >= self._reset_ticks:
                self.session.reset_object()
                self._broken_since = None
        else:
            self._broken_since = None
        self.session.step(inp)
        self.ticks_done += 1
        return self.running

    def finish(self) -> None:
        self.session.end_trial()


def run_trial(
    session: SimulationSession,
    operator: ScriptedOperator | None,
    trial_index: int,
    schedule: Schedule = Schedule(),
) -> TrialRecord:
    """Simulate one trial; telemetry stays on the session for export."""
    driver = TrialDriver(session, schedule)
    driver.start()
    if operator is not None:
        operator.begin_trial(driver.ticks_per_trial, start_t=session.clock)
    while driver.running:
        inp = ZERO_INPUT if operator is None else operator.step(session.observation())
        driver.tick(inp)
    driver.finish()
    return TrialRecord(trial_index=trial_index, attempts=segment_attempts(session.telemetry))


def replay_recorded_inputs(
    session: SimulationSession,
    inputs_by_trial: dict[int, list],
    schedule: Schedule = Schedule(),
) -> list[Telemetry]:
    """Drive a session through a recorded per-tick input stream.

    Uses the same tick path as the live server, so a live session's input
    log reproduces its telemetry exactly (a trailing partial trial replays
    for however many ticks were recorded).
    """
    telems = []
    trials = sorted(inputs_by_trial)
    for idx, k in enumerate(trials):
        driver = TrialDriver(session, schedule)
        driver.start()
        for inp in inputs_by_trial[k]:
            driver.tick(inp)
        completed = not driver.running
        if completed:
            driver.finish()
        telems.append(session.telemetry)
        if completed and idx < len(trials) - 1:
            session.skip_time(schedule.break_s)
    return telems


@dataclass(slots=True)
class SessionResult:
    session_id: str
    group: Group
    trials: list[TrialRecord]
    telemetry: list[Telemetry]
    tracking: dict  # muscle -> list of (level, rmse)


@dataclass(slots=True)
class ExperimentResult:
    group: Group
    seed: int
    sessions: list[SessionResult]

    def attempt_rows(self) -> list[dict]:
        rows = []
        for s in self.sessions:
            for trial in s.trials:
                for idx, a in enumerate(trial.attempts):
                    rows.append(
                        {
                            "session_id": s.session_id,
                            "group": s.group.value,
                            "trial": trial.trial_index,
                            "attempt_idx": idx,
                            "mode": a.mode.value,
                            "start_t": a.start_t,
                            "end_t": a.end_t,
                            "min100_mean": a.min100_mean,
                            "in_margin": a.in_margin,
                            "lifted": a.lifted,
                            "airborne_duration": a.airborne_duration,
                            "broke": a.broke,
                        }
                    )
        return rows

    def trial_rows(self) -> list[dict]:
        rows = []
        for s in self.sessions:
            for trial in s.trials:
                rows.append(
                    {
                        "session_id": s.session_id,
                        "group": s.group.value,
                        "trial": trial.trial_index,
                        "lifts": trial.lifts,
                        "breaks": trial.breaks,
                    }
                )
        return rows


def run_experiment(
    group: Group,
    seed: int,
    n_sessions: int = 1,
    pparams: PlantParams | None = None,
    cparams=None,
    vparams=None,
    policy: PolicyParams | None = None,
    schedule: Schedule = Schedule(),
) -> ExperimentResult:
    """Run the full protocol for one group: training assessment plus 7 trials.

    Sessions are independently seeded from the experiment seed and may in
    principle run in parallel; here they run sequentially for determinism.
    """
    pparams = pparams or PlantParams()
    base_policy = policy or PolicyParams()
    root = np.random.SeedSequence(seed)
    children = root.spawn(n_sessions)
    sessions: list[SessionResult] = []
    for s_idx in range(n_sessions):
        rng = np.random.default_rng(children[s_idx])
        session = SimulationSession(group, pparams, cparams, vparams)
        operator = ScriptedOperator(base_policy, session.pparams, session.cparams, rng)

        tracking = {}
        for muscle in ("flex", "ext"):
            results = []
            for level in TRACKING_LEVELS:
                sig = synth_tracking_signal(
                    level, TRACKING_HOLD_S, session.pparams.tick, rng, base_policy.tremor_sigma
                )
                rmse = tracking_assessment([level], sig, TRACKING_HOLD_S, session.pparams.tick)
                results.append((level, float(rmse[0])))
            tracking[muscle] = results

        trials: list[TrialRecord] = []
        telems: list[Telemetry] = []
        for k in range(1, schedule.trials + 1):
            record = run_trial(session, operator, k, schedule)
            trials.append(record)
            telems.append(session.telemetry)
            if k < schedule.trials:
                session.skip_time(schedule.break_s)
        sessions.append(
            SessionResult(
                session_id=f"{group.value}-s{s_idx:02d}",
                group=group,
                trials=trials,
                telemetry=telems,
                tracking=tracking,
            )
        )
    return ExperimentResult(group=group, seed=seed, sessions=sessions)


# -- delimited output -------------------------------------------------------

ATTEMPT_COLUMNS = [
    "session_id", "group", "trial", "attempt_idx", "mode", "start_t", "end_t",
    "min100_mean", "in_margin", "lifted", "airborne_duration", "broke",
]
TRIAL_COLUMNS = ["session_id", "group", "trial", "lifts", "breaks"]
TRACKING_COLUMNS = ["session_id", "group", "muscle", "level", "rmse"]


def _format_cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_rows(path, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_format_cell(row[c]) for c in columns])


def export_experiment(result: ExperimentResult, out_dir: str,
                      write_telemetry: bool = True) -> dict[str, str]:
    """Write attempt/trial/tracking CSVs, telemetry logs, and a manifest."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "attempts": os.path.join(out_dir, "attempts.csv"),
        "trials": os.path.join(out_dir, "trials.csv"),
        "tracking": os.path.join(out_dir, "tracking.csv"),
    }
    write_rows(paths["attempts"], ATTEMPT_COLUMNS, result.attempt_rows())
    write_rows(paths["trials"], TRIAL_COLUMNS, result.trial_rows())
    tracking_rows = []
    for s in result.sessions:
        for muscle, pairs in s.tracking.items():
            for level, rmse in pairs:
                tracking_rows.append(
                    {
                        "session_id": s.session_id,
                        "group": s.group.value,
                        "muscle": muscle,
                        "level": level,
                        "rmse": rmse,
                    }
                )
    write_rows(paths["tracking"], TRACKING_COLUMNS, tracking_rows)

    dt = result.sessions[0].telemetry[0].dt if result.sessions else 0.001
    manifest = {"seed": result.seed, "group": result.group.value, "dt": dt, "sessions": {}}
    if write_telemetry:
        tdir = os.path.join(out_dir, "telemetry")
        os.makedirs(tdir, exist_ok=True)
        for s in result.sessions:
            files = []
            for k, telem in enumerate(s.telemetry, start=1):
                fname = f"{s.session_id}_trial{k}.csv"
                telem.to_csv(os.path.join(tdir, fname))
                files.append(fname)
            manifest["sessions"][s.session_id] = {"group": s.group.value, "trials": files}
        paths["telemetry_dir"] = tdir
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    paths["manifest"] = os.path.join(out_dir, "manifest.json")
    return paths


def replay_metrics(telemetry_dir: str, manifest_path: str, out_dir: str) -> dict[str, str]:
    """Re-derive attempt and trial CSVs from persisted telemetry logs."""
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    os.makedirs(out_dir, exist_ok=True)
    dt = float(manifest.get("dt", 0.0)) or None
    attempt_rows = []
    trial_rows = []
    for session_id in sorted(manifest["sessions"]):
        entry = manifest["sessions"][session_id]
        group = entry["group"]
        for k, fname in enumerate(entry["trials"], start=1):
            telem = Telemetry.from_csv(os.path.join(telemetry_dir, fname), dt=dt)
            attempts = segment_attempts(telem)
            for idx, a in enumerate(attempts):
                attempt_rows.append(
                    {
                        "session_id": session_id,
                        "group": group,
                        "trial": k,
                        "attempt_idx": idx,
                        "mode": a.mode.value,
                        "start_t": a.start_t,
                        "end_t": a.end_t,
                        "min100_mean": a.min100_mean,
                        "in_margin": a.in_margin,
                        "lifted": a.lifted,
                        "airborne_duration": a.airborne_duration,
                        "broke": a.broke,
                    }
                )
            trial_rows.append(
                {
                    "session_id": session_id,
                    "group": group,
                    "trial": k,
                    "lifts": sum(1 for a in attempts if a.lifted),
                    "breaks": sum(1 for a in attempts if a.broke),
                }
            )
    paths = {
        "attempts": os.path.join(out_dir, "attempts.csv"),
        "trials": os.path.join(out_dir, "trials.csv"),
    }
    write_rows(paths["attempts"], ATTEMPT_COLUMNS, attempt_rows)
    write_rows(paths["trials"], TRIAL_COLUMNS, trial_rows)
    return paths
