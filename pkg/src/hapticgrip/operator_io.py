"""Operator command generation and normalization.

EMG activations arrive MVC-normalized in [0, 1] for an antagonist pair (wrist
flexion closes, extension opens). The net difference drives the motor through
an affine map onto the actuator's usable voltage band, with a symmetric
deadband threshold that also serves as the autonomy trigger level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .plant import PlantParams


@dataclass(frozen=True, slots=True)
class MvcCalibration:
    """Maximum-voluntary-contraction reference voltages for each muscle group."""

    flex_mvc: float
    ext_mvc: float

    def __post_init__(self):
        if self.flex_mvc <= 0 or self.ext_mvc <= 0:
            raise ValueError("MVC references must be positive")


@dataclass(frozen=True, slots=True)
class OperatorInput:
    """One tick of operator command: normalized activations plus lift/button."""

    flex: float = 0.0
    ext: float = 0.0
    lift: float = 0.0
    button: bool = False


ZERO_INPUT = OperatorInput()


def normalize(raw: float, mvc: float) -> float:
    """MVC-normalize a raw EMG amplitude: clamp(raw / mvc, 0, 1)."""
    if not math.isfinite(raw):
        raise ValueError("raw EMG amplitude must be finite")
    if mvc <= 0 or not math.isfinite(mvc):
        raise ValueError("MVC reference must be positive and finite")
    return min(max(raw / mvc, 0.0), 1.0)


def proportional_command(inp: OperatorInput, threshold: float, params: PlantParams) -> float:
    """Map the net activation difference to a signed motor voltage.

    Let d = flex - ext. |d| at or below ``threshold`` gives 0; above it the
    magnitude maps affinely from (threshold, 1] onto
    (motor_deadband, motor_max]. Positive output closes the device.
    """
    if not (0.0 <= threshold < 1.0):
        raise ValueError("threshold must lie in [0, 1)")
    d = inp.flex - inp.ext
    mag = abs(d)
    if mag <= threshold:
        return 0.0
    span = params.motor_max - params.motor_deadband
    out = params.motor_deadband + (mag - threshold) / (1.0 - threshold) * span
    return math.copysign(out, d)


def activation_for_motor(volts: float, threshold: float, params: PlantParams) -> float:
    """Inverse of :func:`proportional_command` for one-sided activation.

    Returns the activation difference that yields ``volts`` of motor drive
    (clamped into the usable band). Used by scripted operators to plan speeds.
    """
    v = min(max(volts, params.motor_deadband), params.motor_max)
    span = params.motor_max - params.motor_deadband
    return threshold + (v - params.motor_deadband) / span * (1.0 - threshold)


def tracking_assessment(
    levels: list[float],
    signal: np.ndarray,
    hold: float,
    dt: float = 0.001,
) -> np.ndarray:
    """RMS error between an activation recording and each commanded level.

    The recording is expected to hold the levels consecutively, ``hold``
    seconds each, sampled at ``dt``. Returns one RMSE per level.
    """
    if not levels:
        raise ValueError("need at least one level")
    if any(not (0.0 < lv < 1.0) for lv in levels):
        raise ValueError("levels must lie in (0, 1)")
    if hold <= 0 or dt <= 0:
        raise ValueError("hold and dt must be positive")
    x = np.asarray(signal, dtype=float)
    n = int(round(hold / dt))
    if n * len(levels) > x.size:
        raise ValueError(
            f"signal too short: need {n * len(levels)} samples, got {x.size}"
        )
    out = np.empty(len(levels))
    for i, level in enumerate(levels):
        window = x[i * n : (i + 1) * n]
        out[i] = math.sqrt(float(np.mean((window - level) ** 2)))
    return out
