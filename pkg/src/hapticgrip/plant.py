"""Fixed-timestep plant model: voluntary-closing terminal device plus brittle object.

The terminal device is speed-controlled: motor volts above a deadband command
aperture velocity. The instrumented object sits inside the grasp axis; once the
aperture closes past the object width, a collapsible wall compresses like a
linear spring until it breaks. Grip force is read out as a load-cell voltage
that rests near 4.5 V and drops as force rises.

All transitions are pure functions of (state, inputs, params); stepping the
same initial state with the same input sequence is bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum


@dataclass(frozen=True, slots=True)
class PlantParams:
    """Physical constants of the terminal device and instrumented object.

    Units: millimetres, newtons, volts, seconds, grams. ``aperture_gain`` is
    the closing/opening speed produced per volt of motor drive above the
    deadband. The collapsible wall is a linear spring sized so that grip force
    reaches ``break_force`` after ``break_compression`` mm of wall travel.
    """

    max_aperture: float = 83.0
    object_width: float = 74.0
    object_mass: float = 310.0  # recorded for provenance; lift is threshold-gated
    rest_voltage: float = 4.5
    contact_voltage: float = 4.3
    volts_per_newton: float = 0.15
    break_force: float = 11.0
    hold_force: float = 3.0
    motor_deadband: float = 1.5
    motor_max: float = 7.0
    aperture_gain: float = 15.0
    tick: float = 0.001
    break_compression: float = 4.0

    def __post_init__(self):
        if not (0 < self.contact_voltage < self.rest_voltage):
            raise ValueError("require 0 < contact_voltage < rest_voltage")
        if not (0 < self.hold_force < self.break_force):
            raise ValueError("require 0 < hold_force < break_force")
        if self.break_force * self.volts_per_newton >= self.rest_voltage:
            raise ValueError("break_force must map inside (0, rest_voltage)")
        if not (0 < self.motor_deadband < self.motor_max):
            raise ValueError("require 0 < motor_deadband < motor_max")
        if self.tick <= 0 or self.break_compression <= 0 or self.aperture_gain <= 0:
            raise ValueError("tick, break_compression, aperture_gain must be positive")
        if self.max_aperture <= self.object_width:
            raise ValueError("max_aperture must exceed object_width")

    @property
    def wall_stiffness(self) -> float:
        """Wall spring constant in N/mm."""
        return self.break_force / self.break_compression


@dataclass(frozen=True, slots=True)
class PlantState:
    """Full physical state of prosthesis + object at one tick.

    ``aperture_velocity`` is dA/dt in mm/s (negative while closing).
    ``airborne_since`` is the sim time the current airborne episode began,
    or None when the object is on the table.
    """

    t: float
    aperture: float
    aperture_velocity: float
    grip_force: float
    load_voltage: float
    in_contact: bool
    airborne: bool
    airborne_since: float | None
    broken: bool
    wall_displacement: float


class HoldStatus(Enum):
    HELD = "held"
    SLIPPING = "slipping"
    DROPPED = "dropped"


def initial_state(params: PlantParams, aperture: float | None = None) -> PlantState:
    """Fresh state: hand open at ``aperture`` (default fully open), object on table."""
    a = params.max_aperture if aperture is None else float(aperture)
    if not (0.0 <= a <= params.max_aperture):
        raise ValueError("initial aperture outside [0, max_aperture]")
    force = grip_force_at(a, params)
    volts = load_voltage(force, params)
    return PlantState(
        t=0.0,
        aperture=a,
        aperture_velocity=0.0,
        grip_force=force,
        load_voltage=volts,
        in_contact=volts < params.contact_voltage,
        airborne=False,
        airborne_since=None,
        broken=False,
        wall_displacement=max(0.0, params.object_width - a),
    )


def grip_force_at(aperture: float, params: PlantParams) -> float:
    """Spring force (N) exerted by the wall at a given aperture; 0 out of contact."""
    compression = params.object_width - aperture
    if compression <= 0.0:
        return 0.0
    return params.wall_stiffness * compression


def load_voltage(force: float, params: PlantParams) -> float:
    """Load-cell voltage for a grip force: rest voltage minus volts_per_newton * F.

    Strictly decreasing in force until the 0 V clamp. Rejects non-finite or
    negative force.
    """
    if not math.isfinite(force) or force < 0.0:
        raise ValueError(f"force must be finite and >= 0, got {force!r}")
    v = params.rest_voltage - params.volts_per_newton * force
    return min(max(v, 0.0), params.rest_voltage)


def step_plant(state: PlantState, motor: float, lift: float, params: PlantParams) -> PlantState:
    """Advance the plant one tick under a signed motor voltage and lift command.

    Positive motor closes the terminal device; magnitude below the deadband
    produces no motion and magnitude is capped at ``motor_max``. A broken
    object freezes the state (only time advances) until :func:`reset_object`.

    The airborne flag rises when lift >= 0.5 with grip force at or above
    ``hold_force``, and falls when either condition lapses or the wall breaks.
    """
    if not (math.isfinite(motor) and math.isfinite(lift)):
        raise ValueError("motor and lift must be finite")
    dt = params.tick
    if state.broken:
        return replace(state, t=state.t + dt, aperture_velocity=0.0)

    drive = min(abs(motor), params.motor_max) - params.motor_deadband
    speed = params.aperture_gain * drive if drive > 0.0 else 0.0
    velocity = -speed if motor > 0.0 else speed  # dA/dt
    aperture = state.aperture + velocity * dt
    if aperture < 0.0:
        aperture = 0.0
    elif aperture > params.max_aperture:
        aperture = params.max_aperture

    force = grip_force_at(aperture, params)
    broken = force >= params.break_force
    volts = load_voltage(force, params)

    airborne = lift >= 0.5 and force >= params.hold_force and not broken
    if airborne:
        since = state.airborne_since if state.airborne else state.t + dt
    else:
        since = None

    return PlantState(
        t=state.t + dt,
        aperture=aperture,
        aperture_velocity=(aperture - state.aperture) / dt,
        grip_force=force,
        load_voltage=volts,
        in_contact=volts < params.contact_voltage,
        airborne=airborne,
        airborne_since=since,
        broken=broken,
        wall_displacement=max(0.0, params.object_width - aperture),
    )


def hold_check(state: PlantState, params: PlantParams) -> HoldStatus | None:
    """Classify the grasp-hold condition of a state.

    HELD while airborne with force at or above ``hold_force`` (boundary
    inclusive); SLIPPING the tick force crosses below it while airborne;
    DROPPED afterwards while the failed grasp is still on the object.
    Returns None when no hold is in progress (e.g. object on table, hand
    resting).
    """
    if state.airborne:
        if state.grip_force >= params.hold_force:
            return HoldStatus.HELD
        return HoldStatus.SLIPPING
    if state.in_contact and state.grip_force < params.hold_force:
        return HoldStatus.DROPPED
    return None


def reset_object(state: PlantState, params: PlantParams) -> PlantState:
    """Swap in a fresh object and open the hand; time continues.

    Models the experimenter re-erecting the collapsible wall after a break.
    """
    fresh = initial_state(params)
    return replace(fresh, t=state.t)
