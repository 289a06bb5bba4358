"""Scripted synthetic operators for batch experiments.

Each operator runs a grasp-and-lift cycle against the simulated prosthesis:
approach until visible contact, squeeze toward a per-attempt force target,
optionally fine-correct using the vibrotactile envelope, hold briefly, lift
for three-plus seconds, set down, release, repeat. Shared-control operators
additionally perform the enable ritual (clean one-second lift), trigger the
autonomous closer with a flexion pulse, and ride out the autonomous grasp.

Imperfection model:
  * the per-attempt force target is drawn target_force + N(0, overshoot_sigma),
    standing in for open-loop motor planning error;
  * activations carry Ornstein-Uhlenbeck tremor (correlation time ~100 ms)
    scaled by tremor_sigma;
  * feedback corrections run through a perceived load estimate with a
    per-attempt bias and a sample-and-hold reaction interval, so feedback
    users land near the margin center but not perfectly.

All randomness comes from one seeded generator per operator, so identical
seeds give identical input streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .arbiter import Group, SharedMode
from .autonomy import AutoStage, ControllerParams
from .operator_io import OperatorInput, activation_for_motor
from .plant import PlantParams
from .session import Observation

# Motion plan constants (volts of motor drive / mm of travel / seconds).
APPROACH_FAST_MMS = 70.0
APPROACH_SLOW_MMS = 12.0
SLOW_ZONE_MM = 6.0
ADJUST_MMS = 8.0
RELEASE_MMS = 40.0
CLEAR_MM = 3.0
HOLD_PAUSE_S = 0.5
LIFT_HOLD_S = 3.3
AIRBORNE_WAIT_S = 1.0
LOWER_S = 0.2
IDLE_S = 0.3
REACTION_S = 0.15
ADJUST_TIMEOUT_S = 2.5
AUTO_WAIT_TIMEOUT_S = 6.0
TRIGGER_FLEX = 0.35
# Felt-vibration calibration error across attempts; vibrotactile intensity
# JNDs run 10-30 % of scale, which here is a few tenths of a volt.
PERCEPTION_BIAS_V = 0.3
PERCEPTION_NOISE_V = 0.08
PERCEPTION_TOL_V = 0.12
MARGIN_CENTER_V = 3.5
SQUEEZE_STOP_V = 3.62
MIN_SQUEEZE_MMS = 6.0
MAX_SQUEEZE_MMS = 25.0
MIN_ATTEMPT_WINDOW_S = 4.0
# Wall compression visibly close to collapse; seeing it during an autonomous
# grasp convinces the operator to override and re-train the controller.
CRITICAL_COMPRESSION = 0.9
TREMOR_TAU_S = 0.1
NOISE_BLOCK = 8192


@dataclass(frozen=True, slots=True)
class PolicyParams:
    """Synthetic-operator knobs; sigmas of zero give an exact, repeatable policy."""

    target_force: float = 5.8  # N
    rise_time: float = 0.6  # s taken by the squeeze ramp
    overshoot_sigma: float = 0.0  # N of per-attempt landing error
    tremor_sigma: float = 0.0  # activation noise scale
    uses_feedback: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.overshoot_sigma < 0 or self.tremor_sigma < 0:
            raise ValueError("sigmas must be >= 0")
        if self.rise_time <= 0:
            raise ValueError("rise_time must be positive")
        if self.target_force <= 0:
            raise ValueError("target_force must be positive")


class Phase(Enum):
    IDLE = "idle"
    APPROACH = "approach"
    SQUEEZE = "squeeze"
    ADJUST = "adjust"
    HOLD_PAUSE = "hold_pause"
    LIFT = "lift"
    LOWER = "lower"
    RELEASE = "release"
    TRIGGER = "trigger"
    AUTO_WAIT = "auto_wait"
    AUTO_LIFT = "auto_lift"
    AUTO_LOWER = "auto_lower"
    AUTO_RELEASE = "auto_release"
    BROKEN_WAIT = "broken_wait"


class ScriptedOperator:
    """Stateful grasp-cycle policy; call :meth:`step` once per tick."""

    def __init__(
        self,
        policy: PolicyParams,
        pparams: PlantParams,
        cparams: ControllerParams,
        rng: np.random.Generator | None = None,
    ):
        self.policy = policy
        self.pp = pparams
        self.cp = cparams
        self.rng = rng if rng is not None else np.random.default_rng(policy.seed)
        self.dt = pparams.tick
        self.phase = Phase.IDLE
        self.phase_t = 0.0
        self._flex = 0.0
        self._ext = 0.0
        self._lift = 0.0
        self._button = False
        # squeeze plan
        self._squeeze_ticks = 0
        self._squeeze_left = 0
        self._squeeze_act = 0.0
        self._target_force = policy.target_force
        # feedback correction state
        self._bias = 0.0
        self._next_sample_t = 0.0
        self._burst_left = 0
        self._burst_close = True
        self._airborne_started = None
        self._trial_end_t: float | None = None
        self._seen_compression = 0.0
        # tremor noise
        self._phi = math.exp(-self.dt / TREMOR_TAU_S)
        self._nscale = policy.tremor_sigma * math.sqrt(1.0 - self._phi * self._phi)
        self._noise = np.zeros((0, 2))
        self._noise_i = 0
        self._nstate = np.zeros(2)
        self._handlers = {p: getattr(self, "_phase_" + p.value) for p in Phase}

    # -- noise ---------------------------------------------------------

    def _refill_noise(self, n: int = NOISE_BLOCK) -> None:
        eps = self.rng.standard_normal((n, 2))
        block = np.empty((n, 2))
        state = self._nstate
        phi = self._phi
        s = self._nscale
        for i in range(n):
            state = phi * state + s * eps[i]
            block[i] = state
        self._nstate = state
        self._noise = block
        self._noise_i = 0

    def _tremor(self) -> tuple[float, float]:
        if self.policy.tremor_sigma == 0.0:
            return 0.0, 0.0
        if self._noise_i >= len(self._noise):
            self._refill_noise()
        nf, ne = self._noise[self._noise_i]
        self._noise_i += 1
        return float(nf), float(ne)

    def begin_trial(self, expected_ticks: int | None = None, start_t: float = 0.0) -> None:
        """Reset the phase machine at a trial boundary (plant was reset).

        ``start_t``/``expected_ticks`` give the operator the visible trial
        clock so it does not begin a fresh grasp in the final moments.
        """
        self.phase = Phase.IDLE
        self.phase_t = 0.0
        self._airborne_started = None
        if expected_ticks:
            self._trial_end_t = start_t + expected_ticks * self.dt
            if self.policy.tremor_sigma > 0.0:
                self._refill_noise(expected_ticks + 16)
        else:
            self._trial_end_t = None

    # -- plan helpers ----------------------------------------------------

    def _act_for_speed(self, mm_per_s: float) -> float:
        volts = self.pp.motor_deadband + mm_per_s / self.pp.aperture_gain
        return activation_for_motor(volts, self.cp.flex_trigger, self.pp)

    def _begin_attempt(self) -> None:
        draw = self.rng.normal(0.0, self.policy.overshoot_sigma) if self.policy.overshoot_sigma > 0 else 0.0
        self._target_force = max(0.5, self.policy.target_force + draw)
        self._bias = (
            self.rng.normal(0.0, PERCEPTION_BIAS_V)
            if self.policy.tremor_sigma > 0 or self.policy.overshoot_sigma > 0
            else 0.0
        )

    def _plan_squeeze(self, aperture: float) -> None:
        """Size the squeeze ramp from the observed aperture to the force target."""
        k = self.pp.wall_stiffness
        target_aperture = self.pp.object_width - self._target_force / k
        travel = max(0.0, aperture - target_aperture)
        n = max(1, int(round(self.policy.rise_time / self.dt)))
        speed = travel / (n * self.dt)
        if travel > 0 and not (MIN_SQUEEZE_MMS <= speed <= MAX_SQUEEZE_MMS):
            speed = min(max(speed, MIN_SQUEEZE_MMS), MAX_SQUEEZE_MMS)
            n = max(1, int(round(travel / (speed * self.dt))))
            speed = travel / (n * self.dt)
        self._squeeze_ticks = n
        self._squeeze_act = self._act_for_speed(speed) if travel > 0 else 0.0

    def _perceive_load(self, obs: Observation) -> float:
        """Invert the vibration envelope into a load estimate.

        Adds the per-attempt perception bias plus independent per-sample
        noise (only when the policy is configured noisy), modelling the
        coarse amplitude resolution of felt vibration.
        """
        vib_gain = 10.0
        threshold = 4.3
        noise = 0.0
        if self.policy.tremor_sigma > 0 or self.policy.overshoot_sigma > 0:
            noise = float(self.rng.normal(0.0, PERCEPTION_NOISE_V))
        if obs.nu <= 0.0:
            return threshold + 0.05 + self._bias + noise
        return threshold * (1.0 - obs.nu / vib_gain) + self._bias + noise

    # -- phase machine ---------------------------------------------------

    def _enter(self, phase: Phase) -> None:
        self.phase = phase
        self.phase_t = 0.0

    def step(self, obs: Observation) -> OperatorInput:
        """One tick of operator behaviour for the given observation."""
        self._flex = 0.0
        self._ext = 0.0
        self._button = False
        p = self.phase

        if obs.broken and p is not Phase.BROKEN_WAIT:
            self._enter(Phase.BROKEN_WAIT)
            self._lift = 0.0
            p = self.phase

        self._handlers[p](obs)

        nf, ne = self._tremor()
        flex = min(max(self._flex + nf, 0.0), 1.0)
        ext = min(max(self._ext + ne, 0.0), 1.0)
        self.phase_t += self.dt
        return OperatorInput(flex=flex, ext=ext, lift=self._lift, button=self._button)

    # each _phase_* sets intended activations and may switch phase

    def _phase_idle(self, obs: Observation) -> None:
        self._lift = 0.0
        if self.phase_t < IDLE_S:
            return
        if self._trial_end_t is not None and self._trial_end_t - obs.t < MIN_ATTEMPT_WINDOW_S:
            return  # not enough trial left to bother grasping
        if obs.group is Group.SHARED:
            if obs.shared is SharedMode.ARMED:
                self._enter(Phase.TRIGGER)
                return
            if obs.shared is SharedMode.AUTO:
                self._seen_compression = 0.0
                self._enter(Phase.AUTO_WAIT)
                return
        self._begin_attempt()
        self._enter(Phase.APPROACH)

    def _phase_approach(self, obs: Observation) -> None:
        if obs.in_contact:
            self._plan_squeeze(obs.aperture)
            self._squeeze_left = self._squeeze_ticks
            self._next_sample_t = REACTION_S  # first mid-squeeze glance
            self._enter(Phase.SQUEEZE)
            self._flex = self._squeeze_act
            self._squeeze_left -= 1
            return
        if obs.aperture > self.pp.object_width + SLOW_ZONE_MM:
            self._flex = self._act_for_speed(APPROACH_FAST_MMS)
        else:
            self._flex = self._act_for_speed(APPROACH_SLOW_MMS)

    def _phase_squeeze(self, obs: Observation) -> None:
        feedback = self.policy.uses_feedback and obs.feedback_enabled
        if self._squeeze_left > 0:
            # With feedback, the ramp is monitored: once the felt load reaches
            # the margin zone the operator stops early instead of completing
            # the planned travel (reaction-lagged, so fast ramps overshoot).
            if feedback and self.phase_t >= self._next_sample_t:
                self._next_sample_t = self.phase_t + REACTION_S
                if self._perceive_load(obs) <= SQUEEZE_STOP_V:
                    self._squeeze_left = 0
                    self._next_sample_t = 0.0
                    self._burst_left = 0
                    self._enter(Phase.ADJUST)
                    return
            self._flex = self._squeeze_act
            self._squeeze_left -= 1
            return
        if feedback:
            self._next_sample_t = 0.0
            self._burst_left = 0
            self._enter(Phase.ADJUST)
        else:
            self._enter(Phase.HOLD_PAUSE)

    def _phase_adjust(self, obs: Observation) -> None:
        """Nudge the grip toward the margin center using the felt vibration.

        Perception is sample-and-hold at the reaction interval; each sample
        sized one corrective burst (deadbeat: burst travel equals the
        perceived error), so corrections converge instead of limit-cycling.
        """
        if self.phase_t >= ADJUST_TIMEOUT_S:
            self._enter(Phase.HOLD_PAUSE)
            return
        if self._burst_left > 0:
            if self._burst_close:
                self._flex = self._act_for_speed(ADJUST_MMS)
            else:
                self._ext = self._act_for_speed(ADJUST_MMS)
            self._burst_left -= 1
            return
        if self.phase_t < self._next_sample_t:
            return
        err = self._perceive_load(obs) - MARGIN_CENTER_V
        if abs(err) <= PERCEPTION_TOL_V:
            self._enter(Phase.HOLD_PAUSE)
            return
        volts_per_s = self.pp.volts_per_newton * self.pp.wall_stiffness * ADJUST_MMS
        ticks = max(1, int(round(abs(err) / volts_per_s / self.dt)))
        self._burst_left = min(ticks, int(round(REACTION_S / self.dt)))
        self._burst_close = err > 0  # perceived load above center: grip too weak
        self._next_sample_t = self.phase_t + REACTION_S

    def _phase_hold_pause(self, obs: Observation) -> None:
        if self.phase_t >= HOLD_PAUSE_S:
            self._airborne_started = None
            self._burst_left = 0
            self._next_sample_t = REACTION_S
            self._enter(Phase.LIFT)
            self._lift = 1.0

    def _phase_lift(self, obs: Observation) -> None:
        self._lift = 1.0
        if obs.airborne:
            if self._airborne_started is None:
                self._airborne_started = obs.t
            elif obs.t - self._airborne_started >= LIFT_HOLD_S:
                self._enter(Phase.LOWER)
                self._lift = 0.0
            return
        if self._airborne_started is not None:
            # grasp failed mid-air (drop): give up on this attempt
            self._lift = 0.0
            self._enter(Phase.RELEASE)
            return
        if self.phase_t >= AIRBORNE_WAIT_S:
            # grip too weak to ever leave the table
            self._lift = 0.0
            self._enter(Phase.RELEASE)

    def _phase_lower(self, obs: Observation) -> None:
        self._lift = 0.0
        if self.phase_t >= LOWER_S:
            self._enter(Phase.RELEASE)

    def _phase_release(self, obs: Observation) -> None:
        self._lift = 0.0
        if obs.aperture >= self.pp.object_width + CLEAR_MM and not obs.in_contact:
            self._enter(Phase.IDLE)
            return
        self._ext = self._act_for_speed(RELEASE_MMS)

    def _phase_trigger(self, obs: Observation) -> None:
        if obs.shared is SharedMode.AUTO:
            self._seen_compression = 0.0
            self._enter(Phase.AUTO_WAIT)
            return
        if obs.shared is not SharedMode.ARMED:
            self._enter(Phase.IDLE)
            return
        self._flex = TRIGGER_FLEX

    def _watch_wall(self, obs: Observation) -> None:
        if obs.in_contact:
            frac = (self.pp.object_width - obs.aperture) / self.pp.break_compression
            if frac > self._seen_compression:
                self._seen_compression = frac

    def _phase_auto_wait(self, obs: Observation) -> None:
        if obs.shared is not SharedMode.AUTO:
            self._enter(Phase.IDLE)
            return
        self._watch_wall(obs)
        if obs.stage is AutoStage.HOLDING:
            self._airborne_started = None
            self._enter(Phase.AUTO_LIFT)
            self._lift = 1.0
            return
        if self.phase_t >= AUTO_WAIT_TIMEOUT_S:
            self._button = True  # manual override: something is stuck

    def _phase_auto_lift(self, obs: Observation) -> None:
        if obs.shared is not SharedMode.AUTO:
            self._lift = 0.0
            self._enter(Phase.IDLE)
            return
        self._watch_wall(obs)
        self._lift = 1.0
        if obs.airborne:
            if self._airborne_started is None:
                self._airborne_started = obs.t
            elif obs.t - self._airborne_started >= LIFT_HOLD_S:
                self._enter(Phase.AUTO_LOWER)
                self._lift = 0.0
            return
        if self._airborne_started is not None:
            self._lift = 0.0
            self._enter(Phase.AUTO_RELEASE)
            return
        if self.phase_t >= AIRBORNE_WAIT_S + 2.0:
            self._lift = 0.0
            self._button = True

    def _phase_auto_lower(self, obs: Observation) -> None:
        self._lift = 0.0
        if self.phase_t >= LOWER_S:
            if self._seen_compression >= CRITICAL_COMPRESSION:
                # the learned grip nearly collapsed the wall: override the
                # controller and demonstrate a better grasp
                self._button = True
                self._enter(Phase.RELEASE)
                return
            self._enter(Phase.AUTO_RELEASE)

    def _phase_auto_release(self, obs: Observation) -> None:
        self._lift = 0.0
        if obs.aperture >= self.pp.object_width + CLEAR_MM and not obs.in_contact:
            self._enter(Phase.IDLE)
            return
        self._ext = self._act_for_speed(RELEASE_MMS)

    def _phase_broken_wait(self, obs: Observation) -> None:
        self._lift = 0.0
        if not obs.broken:
            self._enter(Phase.IDLE)


def synth_tracking_signal(
    level: float,
    hold: float,
    dt: float,
    rng: np.random.Generator,
    tremor_sigma: float,
) -> np.ndarray:
    """Synthesize one held-activation recording for the MVC tracking test."""
    n = int(round(hold / dt))
    if tremor_sigma == 0.0:
        return np.full(n, level)
    phi = math.exp(-dt / TREMOR_TAU_S)
    s = tremor_sigma * math.sqrt(1.0 - phi * phi)
    eps = rng.standard_normal(n)
    out = np.empty(n)
    state = 0.0
    for i in range(n):
        state = phi * state + s * eps[i]
        out[i] = state
    return np.clip(level + out, 0.0, 1.0)
