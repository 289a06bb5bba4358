"""Mode-machine tests: enable ritual, trigger, disables, safety invariants."""

import numpy as np
import pytest

from hapticgrip.arbiter import Arbiter, Group, SharedMode, TickEvents, reset_session
from hapticgrip.autonomy import AutoStage, ControllerParams
from hapticgrip.operator_io import OperatorInput
from hapticgrip.plant import PlantParams, PlantState, initial_state, load_voltage

PP = PlantParams()
CP = ControllerParams()


def grip_state(force=6.0, airborne=True, broken=False, t=1.0, aperture=None):
    if aperture is None:
        aperture = PP.object_width - force / PP.wall_stiffness
    volts = load_voltage(force, PP)
    return PlantState(
        t=t,
        aperture=aperture,
        aperture_velocity=0.0,
        grip_force=force,
        load_voltage=volts,
        in_contact=volts < PP.contact_voltage,
        airborne=airborne,
        airborne_since=t - 0.1 if airborne else None,
        broken=broken,
        wall_displacement=max(0.0, PP.object_width - aperture),
    )


class TestResetSession:
    def test_standard(self):
        m = reset_session(Group.STANDARD)
        assert not m.feedback_enabled and m.shared is None and not m.led

    def test_vibrotactile(self):
        m = reset_session(Group.VIBROTACTILE)
        assert m.feedback_enabled and m.shared is None

    def test_shared_starts_manual(self):
        m = reset_session(Group.SHARED)
        assert m.shared is SharedMode.MANUAL and m.feedback_enabled and not m.led


class TestEnableRitual:
    def test_clean_hold_arms_with_captured_mean(self):
        arb = Arbiter(Group.SHARED, CP, PP)
        plant = grip_state(force=6.0)
        n = int(round(CP.enable_hold / PP.tick))
        t = 0.0
        events = []
        for _ in range(n + 1):
            res = arb.step(t, OperatorInput(), plant, TickEvents())
            events.extend(res.events)
            t += PP.tick
        assert "armed" in events
        assert arb.mode.shared is SharedMode.ARMED
        assert arb.mode.led and not arb.mode.feedback_enabled
        assert arb.auto.desired_grip == pytest.approx(plant.load_voltage)

    def test_hold_interrupted_by_drop_restarts(self):
        arb = Arbiter(Group.SHARED, CP, PP)
        plant = grip_state()
        n = int(round(CP.enable_hold / PP.tick))
        t = 0.0
        for _ in range(n // 2):
            arb.step(t, OperatorInput(), plant, TickEvents())
            t += PP.tick
        arb.step(t, OperatorInput(), plant, TickEvents(dropped=True))
        t += PP.tick
        for _ in range(n // 2 + 2):
            res = arb.step(t, OperatorInput(), plant, TickEvents())
            t += PP.tick
        assert arb.mode.shared is SharedMode.MANUAL  # window restarted, not yet full

    def test_grounded_ticks_do_not_count(self):
        arb = Arbiter(Group.SHARED, CP, PP)
        plant = grip_state(airborne=False)
        t = 0.0
        for _ in range(2 * int(CP.enable_hold / PP.tick)):
            arb.step(t, OperatorInput(), plant, TickEvents())
            t += PP.tick
        assert arb.mode.shared is SharedMode.MANUAL


class TestArmedState:
    def _armed(self):
        arb = Arbiter(Group.SHARED, CP, PP)
        arb.arm(3.5, 0.0)
        return arb

    def test_below_trigger_stays_armed_motor_zero(self):
        arb = self._armed()
        res = arb.step(0.0, OperatorInput(flex=0.05), grip_state(airborne=False), TickEvents())
        assert arb.mode.shared is SharedMode.ARMED
        assert res.motor == 0.0

    def test_trigger_starts_stage1(self):
        arb = self._armed()
        res = arb.step(0.0, OperatorInput(flex=0.5), initial_state(PP), TickEvents())
        assert arb.mode.shared is SharedMode.AUTO
        assert arb.auto.stage is AutoStage.STAGE1
        assert "triggered" in res.events
        assert res.motor == pytest.approx(2.5)
        assert res.source == "auto"

    def test_extension_passes_through_while_armed(self):
        arb = self._armed()
        res = arb.step(0.0, OperatorInput(ext=0.6), initial_state(PP), TickEvents())
        assert res.motor < 0.0
        assert res.source == "manual"

    def test_closing_blocked_while_armed(self):
        arb = self._armed()
        # flexion at/above the trigger engages autonomy instead of manual close
        res = arb.step(0.0, OperatorInput(flex=0.09), initial_state(PP), TickEvents())
        assert res.motor == 0.0


class TestDisables:
    def _active(self):
        arb = Arbiter(Group.SHARED, CP, PP)
        arb.arm(3.5, 0.0)
        arb.step(0.0, OperatorInput(flex=0.5), initial_state(PP), TickEvents())
        assert arb.mode.shared is SharedMode.AUTO
        return arb

    def test_break_disables_clears_setpoint_emits_pulse(self):
        arb = self._active()
        res = arb.step(0.01, OperatorInput(), grip_state(broken=True), TickEvents(broke=True))
        assert "disabled_break" in res.events
        assert arb.mode.shared is SharedMode.MANUAL
        assert not arb.mode.led and arb.mode.feedback_enabled
        assert arb.auto.desired_grip is None
        assert arb.pulse_start_t == pytest.approx(0.01)

    def test_drop_disables(self):
        arb = self._active()
        res = arb.step(0.01, OperatorInput(), grip_state(force=1.0, airborne=False), TickEvents(dropped=True))
        assert "disabled_drop" in res.events
        assert arb.auto.desired_grip is None

    def test_button_disables(self):
        arb = self._active()
        res = arb.step(0.3, OperatorInput(button=True), grip_state(), TickEvents())
        assert "disabled_button" in res.events
        assert arb.mode.shared is SharedMode.MANUAL

    def test_button_debounce_filters_bounce(self):
        arb = Arbiter(Group.SHARED, CP, PP)
        arb.arm(3.5, 0.0)
        plant = initial_state(PP)
        arb.step(0.0, OperatorInput(button=True), plant, TickEvents())  # disable 1
        assert arb.mode.shared is SharedMode.MANUAL
        arb.arm(3.5, 0.02)
        # bounce 20 ms later: filtered, stays armed
        arb.step(0.02, OperatorInput(button=False), plant, TickEvents())
        arb.step(0.021, OperatorInput(button=True), plant, TickEvents())
        assert arb.mode.shared is SharedMode.ARMED

    def test_slip_alone_does_not_disable(self):
        arb = self._active()
        arb.step(0.01, OperatorInput(), grip_state(), TickEvents(slip=True))
        assert arb.mode.shared is SharedMode.AUTO

    def test_armed_break_also_disables(self):
        arb = Arbiter(Group.SHARED, CP, PP)
        arb.arm(3.5, 0.0)
        res = arb.step(0.0, OperatorInput(), grip_state(broken=True), TickEvents(broke=True))
        assert "disabled_break" in res.events
        assert arb.auto.desired_grip is None


class TestHoldingRelease:
    def test_deliberate_extension_completes_back_to_armed(self):
        arb = Arbiter(Group.SHARED, CP, PP)
        arb.arm(3.5, 0.0)
        arb.step(0.0, OperatorInput(flex=0.5), initial_state(PP), TickEvents())
        # force the holding stage
        from dataclasses import replace

        arb.auto = replace(arb.auto, stage=AutoStage.HOLDING)
        res = arb.step(0.01, OperatorInput(ext=0.6), grip_state(), TickEvents())
        assert "auto_complete" in res.events
        assert arb.mode.shared is SharedMode.ARMED
        assert arb.auto.desired_grip is not None  # setpoint survives completion
        assert res.motor < 0.0 and res.source == "manual"

    def test_tremor_level_extension_keeps_holding(self):
        arb = Arbiter(Group.SHARED, CP, PP)
        arb.arm(3.5, 0.0)
        arb.step(0.0, OperatorInput(flex=0.5), initial_state(PP), TickEvents())
        from dataclasses import replace

        arb.auto = replace(arb.auto, stage=AutoStage.HOLDING)
        arb.step(0.01, OperatorInput(ext=0.15), grip_state(), TickEvents())
        assert arb.auto.stage is AutoStage.HOLDING


class TestNonSharedGroups:
    @pytest.mark.parametrize("group", [Group.STANDARD, Group.VIBROTACTILE])
    def test_manual_only(self, group):
        arb = Arbiter(group, CP, PP)
        res = arb.step(0.0, OperatorInput(flex=1.0), initial_state(PP), TickEvents())
        assert res.motor == pytest.approx(7.0)
        assert res.source == "manual"
        assert arb.mode.shared is None

    def test_events_ignored(self):
        arb = Arbiter(Group.VIBROTACTILE, CP, PP)
        res = arb.step(0.0, OperatorInput(), grip_state(broken=True), TickEvents(broke=True))
        assert res.events == ()


class TestRandomizedInvariants:
    """Thousands of random input/event sequences must never violate safety."""

    GROUPS = [Group.STANDARD, Group.VIBROTACTILE, Group.SHARED]

    def _random_plant(self, rng):
        force = float(rng.uniform(0, 12))
        aperture = float(rng.uniform(60, 83))
        volts = load_voltage(min(force, 29.0), PP)
        broken = force >= PP.break_force
        airborne = bool(rng.random() < 0.3) and force >= PP.hold_force and not broken
        return PlantState(
            t=0.0,
            aperture=aperture,
            aperture_velocity=float(rng.uniform(-80, 80)),
            grip_force=force,
            load_voltage=volts,
            in_contact=volts < PP.contact_voltage,
            airborne=airborne,
            airborne_since=0.0 if airborne else None,
            broken=broken,
            wall_displacement=0.0,
        )

    @pytest.mark.parametrize("group", GROUPS)
    def test_invariants_under_random_sequences(self, group):
        rng = np.random.default_rng(hash(group.value) % 2**32)
        for seq in range(300):
            arb = Arbiter(group, CP, PP)
            t = 0.0
            for _ in range(60):
                inp = OperatorInput(
                    flex=float(rng.random()),
                    ext=float(rng.random()),
                    lift=float(rng.random()),
                    button=bool(rng.random() < 0.1),
                )
                events = TickEvents(
                    slip=bool(rng.random() < 0.1),
                    broke=bool(rng.random() < 0.05),
                    dropped=bool(rng.random() < 0.05),
                )
                res = arb.step(t, inp, self._random_plant(rng), events)
                mode = arb.mode
                # safety: autonomy only with a captured setpoint
                if mode.shared is SharedMode.AUTO:
                    assert arb.auto.desired_grip is not None
                # feedback XOR led in the shared group
                if group is Group.SHARED:
                    assert mode.feedback_enabled != mode.led
                # exactly one command path
                assert res.source in ("manual", "auto")
                # motor inside actuator limits
                assert abs(res.motor) <= PP.motor_max + 1e-12
                # disable clears the setpoint
                if any(e.startswith("disabled") for e in res.events):
                    assert arb.auto.desired_grip is None
                t += PP.tick
