"""One simulation session: plant + arbiter + haptics advanced tick by tick.

Both the batch harness and the live server drive this same loop, so a
recorded live input stream replayed in batch reproduces identical telemetry.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace

from .arbiter import NO_EVENTS, Arbiter, Group, SharedMode, TickEvents
from .autonomy import AutoStage, ControllerParams, SlipBreak, detect_slip_break
from .haptics import VibrationParams, disable_pulse_active, vibration_amplitude
from .operator_io import OperatorInput
from .plant import PlantParams, PlantState, initial_state, reset_object, step_plant
from .telemetry import Telemetry

LIFT_SUCCESS_S = 3.0  # continuous airborne seconds that count as a successful lift

_SHARED_MODE_CODE = {SharedMode.MANUAL: 2, SharedMode.ARMED: 3, SharedMode.AUTO: 4}


@dataclass(frozen=True, slots=True)
class Observation:
    """What the operator can sense at a tick.

    Vision gives the hand opening, visible contact, airborne status, and a
    collapsed wall; ``nu`` is the vibrotactile envelope actually rendered
    (zero whenever feedback is off), and the LED/shared-mode are on the
    prosthesis itself.
    """

    t: float
    group: Group
    shared: SharedMode | None
    led: bool
    feedback_enabled: bool
    nu: float
    aperture: float
    in_contact: bool
    airborne: bool
    broken: bool
    stage: AutoStage
    pulse_felt: bool


class SimulationSession:
    """Owns one prosthesis + object + controller; stepped by a single caller."""

    def __init__(
        self,
        group: Group,
        pparams: PlantParams | None = None,
        cparams: ControllerParams | None = None,
        vparams: VibrationParams | None = None,
    ):
        self.pparams = pparams or PlantParams()
        self.cparams = cparams or ControllerParams()
        self.vparams = vparams or VibrationParams()
        self.group = group
        self.arbiter = Arbiter(group, self.cparams, self.pparams)
        self.plant = initial_state(self.pparams)
        self.clock = 0.0
        self.lifts = 0
        self.telemetry = Telemetry(dt=self.pparams.tick)
        self._pending = TickEvents()
        deriv_ticks = max(1, int(round(self.cparams.deriv_window / self.pparams.tick)))
        self._l_hist: deque[float] = deque(maxlen=deriv_ticks + 1)
        self._l_hist.append(self.plant.load_voltage)

    # -- lifecycle -----------------------------------------------------

    def start_trial(self) -> None:
        """Fresh plant and telemetry for a trial; controller state persists."""
        self.plant = replace(initial_state(self.pparams), t=self.clock)
        self.telemetry = Telemetry(dt=self.pparams.tick)
        self._pending = TickEvents()
        self._l_hist.clear()
        self._l_hist.append(self.plant.load_voltage)
        self.lifts = 0

    def end_trial(self) -> None:
        """Trial boundary: an in-flight autonomous grasp is cut back to armed."""
        if self.plant.airborne and self.plant.airborne_since is not None:
            if self.plant.t - self.plant.airborne_since >= LIFT_SUCCESS_S - 1e-9:
                self.lifts += 1
        arb = self.arbiter
        if arb.mode.shared is SharedMode.AUTO:
            arb.arm(self.arbiter.auto.desired_grip, self.clock)

    def skip_time(self, seconds: float) -> None:
        """Advance the schedule clock without simulating (inter-trial break)."""
        self.clock += seconds
        self.plant = replace(self.plant, t=self.clock)

    def reset_object(self) -> None:
        """Replace a broken object with a fresh one and open the hand."""
        self.plant = reset_object(self.plant, self.pparams)
        self._l_hist.clear()
        self._l_hist.append(self.plant.load_voltage)

    # -- per-tick ------------------------------------------------------

    def observation(self) -> Observation:
        mode = self.arbiter.mode
        plant = self.plant
        return Observation(
            t=self.clock,
            group=self.group,
            shared=mode.shared,
            led=mode.led,
            feedback_enabled=mode.feedback_enabled,
            nu=vibration_amplitude(plant.load_voltage, self.vparams) if mode.feedback_enabled else 0.0,
            aperture=plant.aperture,
            in_contact=plant.in_contact,
            airborne=plant.airborne,
            broken=plant.broken,
            stage=self.arbiter.auto.stage,
            pulse_felt=self._pulse_active(),
        )

    def _pulse_active(self) -> bool:
        start = self.arbiter.pulse_start_t
        if start is None:
            return False
        return disable_pulse_active(self.clock - start, self.vparams)

    def step(self, inp: OperatorInput) -> None:
        """Advance one tick: arbitrate, actuate, detect events, log."""
        plant = self.plant
        pp = self.pparams
        dt = pp.tick
        t = self.clock

        res = self.arbiter.step(t, inp, plant, self._pending)
        new_plant = step_plant(plant, res.motor, inp.lift, pp)

        self._l_hist.append(new_plant.load_voltage)
        det = detect_slip_break(self._l_hist, dt, self.cparams)
        broke = new_plant.broken and not plant.broken
        dropped = (
            plant.airborne
            and not new_plant.airborne
            and new_plant.grip_force < pp.hold_force
        )
        if det is SlipBreak.NONE and not broke and not dropped:
            self._pending = NO_EVENTS
        else:
            self._pending = TickEvents(slip=det is not SlipBreak.NONE, broke=broke, dropped=dropped)

        if plant.airborne and not new_plant.airborne and plant.airborne_since is not None:
            if new_plant.t - plant.airborne_since >= LIFT_SUCCESS_S - 1e-9:
                self.lifts += 1

        mode = self.arbiter.mode
        if self.group is Group.STANDARD:
            mode_code = 0
        elif self.group is Group.VIBROTACTILE:
            mode_code = 1
        else:
            mode_code = _SHARED_MODE_CODE[mode.shared]

        if mode.feedback_enabled:
            nu = vibration_amplitude(plant.load_voltage, self.vparams)
        elif self._pulse_active():
            nu = self.vparams.gain
        else:
            nu = 0.0

        names = list(res.events)
        if broke:
            names.append("break")
        if dropped:
            names.append("drop")
        elif det is SlipBreak.SLIP:
            names.append("slip")

        self.telemetry.append(
            t,
            mode_code,
            self.arbiter.auto.stage.value,
            inp.flex,
            inp.ext,
            res.motor,
            100.0 * (1.0 - plant.aperture / pp.max_aperture),
            plant.load_voltage,
            nu,
            mode.led,
            plant.airborne,
            plant.broken,
            ";".join(names),
        )

        self.plant = new_plant
        self.clock = t + dt
