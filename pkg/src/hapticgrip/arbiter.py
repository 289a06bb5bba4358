"""Shared-control arbitration between manual EMG control and the autonomous closer.

Three session groups exist: a standard prosthesis (no feedback, manual only),
one with vibrotactile grip-force feedback, and the shared-control group. In
the shared-control group the machine starts in manual-with-feedback mode;
after a clean one-second lift, the grip setpoint is captured and the machine
arms (feedback off, LED on). A flexion above the trigger threshold hands the
motor to the autonomous stages. Opening is always the human's: extension
passes through while armed, and an extension request while the autonomous
grip is holding completes the autonomous cycle back to armed.

A break or a dropped grasp while armed/autonomous disables the controller,
as does the override button: the machine falls back to manual, clears the
captured setpoint, and emits one pulsed vibration.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from enum import Enum

from .autonomy import (
    AutoStage,
    AutoState,
    ControllerParams,
    capture_desired_grip,
    detect_contact,
    stage1_command,
    stage2_command,
    stage3_command,
)
from .operator_io import OperatorInput, proportional_command
from .plant import PlantParams, PlantState


class Group(Enum):
    STANDARD = "standard"
    VIBROTACTILE = "vibro"
    SHARED = "shared"


class SharedMode(Enum):
    MANUAL = "manual"
    ARMED = "armed"
    AUTO = "auto"


@dataclass(frozen=True, slots=True)
class SessionMode:
    """Published mode snapshot: group, shared-control submode, LED, feedback."""

    group: Group
    shared: SharedMode | None
    led: bool
    feedback_enabled: bool


@dataclass(frozen=True, slots=True)
class TickEvents:
    """Ground-truth events observed on the previous plant transition."""

    slip: bool = False
    broke: bool = False
    dropped: bool = False


NO_EVENTS = TickEvents()


@dataclass(frozen=True, slots=True)
class ArbiterResult:
    motor: float
    source: str  # "manual" or "auto": which path fed the motor this tick
    events: tuple[str, ...] = ()


def reset_session(group: Group) -> SessionMode:
    """Session start mode for a group; shared control begins in manual."""
    if group is Group.STANDARD:
        return SessionMode(group, None, led=False, feedback_enabled=False)
    if group is Group.VIBROTACTILE:
        return SessionMode(group, None, led=False, feedback_enabled=True)
    return SessionMode(group, SharedMode.MANUAL, led=False, feedback_enabled=True)


class Arbiter:
    """Per-tick mode machine; the session owner advances it exactly once per tick.

    Holds the capture window, button debounce, and disable-pulse clock in
    addition to the published :class:`SessionMode` and :class:`AutoState`.
    """

    def __init__(self, group: Group, cparams: ControllerParams, pparams: PlantParams):
        self.group = group
        self.cparams = cparams
        self.pparams = pparams
        self.mode = reset_session(group)
        self.auto = AutoState()
        self._window_len = int(round(cparams.enable_hold / pparams.tick))
        self._capture_window: deque[float] = deque(maxlen=self._window_len)
        self._prev_button = False
        self._last_edge_t = -1e9
        self.pulse_start_t: float | None = None

    def reset(self) -> None:
        self.mode = reset_session(self.group)
        self.auto = AutoState()
        self._capture_window.clear()
        self._prev_button = False
        self._last_edge_t = -1e9
        self.pulse_start_t = None

    def arm(self, desired_grip: float, t: float = 0.0) -> None:
        """Force the machine into the armed state with a given setpoint.

        Test/operator-console helper; the normal path is the capture window.
        """
        if self.group is not Group.SHARED:
            raise ValueError("only the shared-control group can arm")
        if desired_grip <= 0:
            raise ValueError("desired grip must be positive volts")
        self.auto = AutoState(desired_grip=desired_grip, stage_entry_t=t)
        self.mode = SessionMode(self.group, SharedMode.ARMED, led=True, feedback_enabled=False)
        self._capture_window.clear()

    def _button_edge(self, t: float, button: bool) -> bool:
        edge = button and not self._prev_button
        self._prev_button = button
        if edge and (t - self._last_edge_t) >= self.cparams.button_debounce:
            self._last_edge_t = t
            return True
        return False

    def _disable(self, t: float, cause: str) -> tuple[str, ...]:
        self.mode = SessionMode(self.group, SharedMode.MANUAL, led=False, feedback_enabled=True)
        self.auto = AutoState()
        self._capture_window.clear()
        self.pulse_start_t = t
        return (f"disabled_{cause}",)

    def step(
        self,
        t: float,
        inp: OperatorInput,
        plant: PlantState,
        events: TickEvents = NO_EVENTS,
    ) -> ArbiterResult:
        """Arbitrate one tick: returns the motor command and any mode events."""
        cp = self.cparams
        pp = self.pparams
        dt = pp.tick
        button = self._button_edge(t, inp.button)

        if self.group is not Group.SHARED:
            motor = proportional_command(inp, cp.flex_trigger, pp)
            return ArbiterResult(motor, "manual")

        shared = self.mode.shared
        out_events: tuple[str, ...] = ()

        if shared is SharedMode.MANUAL:
            motor = proportional_command(inp, cp.flex_trigger, pp)
            clean = (
                plant.airborne
                and not plant.broken
                and not (events.slip or events.broke or events.dropped)
            )
            if clean:
                self._capture_window.append(plant.load_voltage)
                if len(self._capture_window) == self._window_len:
                    try:
                        grip = capture_desired_grip(list(self._capture_window), dt, cp)
                    except ValueError:
                        self._capture_window.clear()
                    else:
                        self.auto = AutoState(desired_grip=grip)
                        self.mode = SessionMode(
                            self.group, SharedMode.ARMED, led=True, feedback_enabled=False
                        )
                        self._capture_window.clear()
                        out_events = ("armed",)
            else:
                self._capture_window.clear()
            return ArbiterResult(motor, "manual", out_events)

        # Armed and auto states share the disable rules.
        if events.broke:
            return ArbiterResult(
                proportional_command(inp, cp.flex_trigger, pp), "manual", self._disable(t, "break")
            )
        if events.dropped:
            return ArbiterResult(
                proportional_command(inp, cp.flex_trigger, pp), "manual", self._disable(t, "drop")
            )
        if button:
            return ArbiterResult(
                proportional_command(inp, cp.flex_trigger, pp), "manual", self._disable(t, "button")
            )

        if shared is SharedMode.ARMED:
            if inp.flex >= cp.flex_trigger:
                self.mode = SessionMode(self.group, SharedMode.AUTO, led=True, feedback_enabled=False)
                self.auto = replace(
                    self.auto, stage=AutoStage.STAGE1, stage_entry_t=t, integral=0.0, settle_timer=0.0
                )
                motor = self._clamp_motor(stage1_command(0.0, cp))
                return ArbiterResult(motor, "auto", ("triggered",))
            # Closing is the autonomy's job while armed; opening stays manual.
            motor = min(proportional_command(inp, cp.flex_trigger, pp), 0.0)
            return ArbiterResult(motor, "manual")

        # AUTO: staged closing, or hand-back on a deliberate extension once
        # holding (threshold above tremor level so the grasp is not
        # surrendered by noise).
        release_request = (inp.ext - inp.flex) > cp.release_threshold
        if self.auto.stage is AutoStage.HOLDING and release_request:
            self.mode = SessionMode(self.group, SharedMode.ARMED, led=True, feedback_enabled=False)
            self.auto = replace(self.auto, stage=AutoStage.IDLE, integral=0.0, settle_timer=0.0)
            motor = proportional_command(inp, cp.flex_trigger, pp)
            return ArbiterResult(motor, "manual", ("auto_complete",))

        stage = self.auto.stage
        if stage is AutoStage.STAGE1:
            closing_speed = -plant.aperture_velocity
            if cp.vel_lower < closing_speed < cp.vel_upper:
                self.auto = replace(self.auto, stage=AutoStage.STAGE2, stage_entry_t=t)
                motor = self._clamp_motor(stage2_command(0.0, cp))
                return ArbiterResult(motor, "auto")
            motor = self._clamp_motor(stage1_command(t - self.auto.stage_entry_t, cp))
            return ArbiterResult(motor, "auto")

        if stage is AutoStage.STAGE2:
            if detect_contact(plant.load_voltage, plant.aperture, cp):
                self.auto = replace(
                    self.auto, stage=AutoStage.STAGE3, stage_entry_t=t, integral=0.0, settle_timer=0.0
                )
                cmd, self.auto = stage3_command(plant.load_voltage, self.auto, dt, cp)
                return ArbiterResult(self._clamp_motor(cmd), "auto", ("contact",))
            motor = self._clamp_motor(stage2_command(t - self.auto.stage_entry_t, cp))
            return ArbiterResult(motor, "auto")

        # STAGE3 or HOLDING: PI regulation continues while holding.
        prev_stage = self.auto.stage
        cmd, self.auto = stage3_command(plant.load_voltage, self.auto, dt, cp)
        out_events = ("settled",) if (prev_stage is AutoStage.STAGE3 and self.auto.stage is AutoStage.HOLDING) else ()
        return ArbiterResult(self._clamp_motor(cmd), "auto", out_events)

    def _clamp_motor(self, volts: float) -> float:
        return min(max(volts, 0.0), self.pparams.motor_max)
