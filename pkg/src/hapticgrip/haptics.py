"""Vibrotactile feedback rendering.

The tactor runs a fixed-frequency carrier whose amplitude grows linearly as
the load-cell voltage falls below the contact threshold, i.e. as grip force
rises. A separate short pulsed pattern signals that the autonomous controller
was disabled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, slots=True)
class VibrationParams:
    carrier: float = 250.0  # Hz
    gain: float = 10.0  # volts at full envelope
    contact_threshold: float = 4.3  # load volts at/above which the tactor is silent
    pulse_duration: float = 0.15  # s per burst (and per gap) in the disable pattern
    pulse_count: int = 2

    def __post_init__(self):
        if self.carrier <= 0 or self.gain <= 0 or self.contact_threshold <= 0:
            raise ValueError("carrier, gain, contact_threshold must be positive")
        if self.pulse_duration <= 0 or self.pulse_count < 1:
            raise ValueError("pulse_duration must be positive, pulse_count >= 1")


def vibration_amplitude(load_volts: float, params: VibrationParams) -> float:
    """Envelope of the grip-force vibration: gain * (threshold - L) / threshold.

    Zero at or above the contact threshold (no contact, tactor silent).
    """
    if load_volts >= params.contact_threshold:
        return 0.0
    return params.gain * (params.contact_threshold - load_volts) / params.contact_threshold


def vibration_sample(load_volts: float, t: float, params: VibrationParams) -> float:
    """Instantaneous tactor drive voltage at time t for a given load voltage."""
    amp = vibration_amplitude(load_volts, params)
    if amp == 0.0:
        return 0.0
    return amp * math.sin(TWO_PI * params.carrier * t)


def disable_pulse(t_since_disable: float, params: VibrationParams) -> float:
    """Pulsed full-amplitude carrier emitted when autonomous control disables.

    ``pulse_count`` bursts of ``pulse_duration`` on / ``pulse_duration`` off,
    then silence forever.
    """
    if t_since_disable < 0.0 or not math.isfinite(t_since_disable):
        raise ValueError("t_since_disable must be finite and >= 0")
    if disable_pulse_active(t_since_disable, params):
        return params.gain * math.sin(TWO_PI * params.carrier * t_since_disable)
    return 0.0


def disable_pulse_active(t_since_disable: float, params: VibrationParams) -> bool:
    """True while ``t_since_disable`` falls inside an on-burst of the pattern."""
    period = 2.0 * params.pulse_duration
    burst = int(t_since_disable // period)
    if burst >= params.pulse_count:
        return False
    return (t_since_disable - burst * period) < params.pulse_duration
