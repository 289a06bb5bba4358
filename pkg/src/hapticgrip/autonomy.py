"""Autonomous grasp controller: staged closing, event detectors, grip capture.

Closing runs in three stages once triggered: a decaying fast-close command,
an exponential re-ramp until contact, then a PI loop that squeezes until the
load voltage sits within a settle band around the captured grip setpoint.
Stage commands are expressed in motor volts and are clamped into the
actuator's range by the arbiter; values under the motor deadband simply
produce no motion.

Slip and breakage show up as sharp positive slopes in the load voltage
(force releasing); the detector thresholds them on a smoothed first
difference. The grip setpoint is captured by averaging the load voltage over
a clean one-second manual lift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np


@dataclass(frozen=True, slots=True)
class ControllerParams:
    """Thresholds, gains, and timing for the shared/autonomous controller.

    ``flex_trigger`` doubles as the manual-command deadband threshold and the
    autonomy trigger level. Velocity thresholds are closing speeds in mm/s
    (positive while the aperture shrinks). ``settle_band`` is a fraction of
    the grip setpoint; the PI stage hands over to holding after the error
    stays inside the band for ``settle_dwell`` seconds.
    """

    flex_trigger: float = 0.1
    stage1_gain: float = 2.5
    stage1_floor: float = 0.3
    stage2_cap: float = 4.0
    stage2_floor: float = -0.5
    vel_lower: float = 2.0
    vel_upper: float = 8.0
    contact_load: float = 4.3  # volts
    contact_aperture: float = 76.0  # mm
    kp: float = 1.0
    ki: float = 3.0
    pi_cap: float = 12.0
    settle_band: float = 0.05
    settle_dwell: float = 0.2
    slip_slope: float = 2.5  # V/s
    break_slope: float = 5.0  # V/s
    enable_hold: float = 1.0  # s of clean lift before the setpoint is captured
    deriv_window: float = 0.02  # s of smoothing for dL/dt
    button_debounce: float = 0.05  # s
    release_threshold: float = 0.2  # net extension that hands a held grasp back

    def __post_init__(self):
        if not (0.0 <= self.flex_trigger < 1.0):
            raise ValueError("flex_trigger must lie in [0, 1)")
        if not (0.0 < self.release_threshold <= 1.0):
            raise ValueError("release_threshold must lie in (0, 1]")
        if not (0.0 < self.settle_band < 1.0):
            raise ValueError("settle_band must lie in (0, 1)")
        if self.slip_slope >= self.break_slope:
            raise ValueError("slip_slope must be below break_slope")
        if self.vel_lower >= self.vel_upper:
            raise ValueError("vel_lower must be below vel_upper")
        if self.stage2_cap <= self.stage2_floor or self.stage2_cap <= 0:
            raise ValueError("stage2_cap must be positive and exceed stage2_floor")
        if self.pi_cap <= 0:
            raise ValueError("pi_cap must be positive")
        if min(self.settle_dwell, self.enable_hold, self.deriv_window) <= 0:
            raise ValueError("settle_dwell, enable_hold, deriv_window must be positive")


class AutoStage(Enum):
    IDLE = 0
    STAGE1 = 1
    STAGE2 = 2
    STAGE3 = 3
    HOLDING = 4


class SlipBreak(Enum):
    NONE = "none"
    SLIP = "slip"
    BREAK = "break"


@dataclass(frozen=True, slots=True)
class AutoState:
    """Controller state: current stage, its clock origin, PI bookkeeping.

    ``desired_grip`` is the captured load-voltage setpoint; it must be set
    before stage 3 can run and survives completed grasps until a disable.
    """

    stage: AutoStage = AutoStage.IDLE
    stage_entry_t: float = 0.0
    integral: float = 0.0
    desired_grip: float | None = None
    settle_timer: float = 0.0


def stage1_command(t_in_stage: float, params: ControllerParams) -> float:
    """Fast-close command: gain * max(floor, e^-t), on the per-stage clock."""
    if t_in_stage < 0:
        raise ValueError("stage time must be >= 0")
    return params.stage1_gain * max(params.stage1_floor, math.exp(-t_in_stage))


def stage2_command(t_in_stage: float, params: ControllerParams) -> float:
    """Re-ramp command: max(floor, min(e^t, cap)), on the per-stage clock."""
    if t_in_stage < 0:
        raise ValueError("stage time must be >= 0")
    if t_in_stage >= math.log(params.stage2_cap):
        return params.stage2_cap
    return max(params.stage2_floor, min(math.exp(t_in_stage), params.stage2_cap))


def stage3_command(
    load_volts: float,
    auto: AutoState,
    dt: float,
    params: ControllerParams,
) -> tuple[float, AutoState]:
    """One PI tick toward the captured setpoint; returns (volts, next state).

    Error is e = L - L_d, so a grip weaker than desired (L above setpoint)
    produces a positive closing command. The integral is clamped so the
    output stays inside [0, pi_cap] (no windup while saturated). The stage
    flips to HOLDING once |e| stays within settle_band * L_d for
    settle_dwell seconds.
    """
    if auto.desired_grip is None:
        raise ValueError("stage 3 requires a captured desired grip")
    if dt <= 0:
        raise ValueError("dt must be positive")
    setpoint = auto.desired_grip
    e = load_volts - setpoint
    p_term = params.kp * e
    out = p_term + params.ki * auto.integral
    out = min(max(out, 0.0), params.pi_cap)

    integral = auto.integral + e * dt
    lo = (0.0 - p_term) / params.ki
    hi = (params.pi_cap - p_term) / params.ki
    integral = min(max(integral, lo), hi)

    band = params.settle_band * setpoint
    timer = auto.settle_timer + dt if abs(e) <= band else 0.0
    stage = auto.stage
    if stage is AutoStage.STAGE3 and timer >= params.settle_dwell:
        stage = AutoStage.HOLDING
    return out, AutoState(
        stage=stage,
        stage_entry_t=auto.stage_entry_t,
        integral=integral,
        desired_grip=setpoint,
        settle_timer=timer,
    )


def detect_contact(load_volts: float, aperture: float, params: ControllerParams) -> bool:
    """Contact: load voltage below its threshold AND aperture below its threshold.

    The aperture guard rejects spurious load dips while the hand is open.
    """
    return load_volts < params.contact_load and aperture < params.contact_aperture


def detect_slip_break(
    load_history,
    dt: float,
    params: ControllerParams,
) -> SlipBreak:
    """Classify the latest smoothed dL/dt: BREAK above 5 V/s, SLIP above 2.5 V/s.

    The slope is a first difference averaged over deriv_window (trailing).
    Only positive slopes (load releasing) classify; fast squeezing is NONE.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = len(load_history)
    if n < 2:
        raise ValueError("need at least 2 samples")
    w = min(n - 1, max(1, int(round(params.deriv_window / dt))))
    slope = (load_history[-1] - load_history[-1 - w]) / (w * dt)
    if slope > params.break_slope:
        return SlipBreak.BREAK
    if slope > params.slip_slope:
        return SlipBreak.SLIP
    return SlipBreak.NONE


def capture_desired_grip(load_window, dt: float, params: ControllerParams) -> float:
    """Average the load voltage over a clean enable-hold window into a setpoint.

    The window must span exactly ``enable_hold`` seconds. Any slip- or
    break-grade release inside the window rejects the capture.
    """
    window = np.asarray(load_window, dtype=float)
    expected = int(round(params.enable_hold / dt))
    if window.size != expected:
        raise ValueError(
            f"capture window must cover {params.enable_hold} s "
            f"({expected} samples at dt={dt}), got {window.size}"
        )
    w = max(1, int(round(params.deriv_window / dt)))
    if window.size > w:
        slopes = (window[w:] - window[:-w]) / (w * dt)
        if slopes.size and float(slopes.max()) > params.slip_slope:
            raise ValueError("slip or break inside capture window")
    return float(window.mean())
