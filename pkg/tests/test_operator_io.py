"""Operator command mapping tests: MVC normalization, proportional law, tracking."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hapticgrip.operator_io import (
    MvcCalibration,
    OperatorInput,
    activation_for_motor,
    normalize,
    proportional_command,
    tracking_assessment,
)
from hapticgrip.plant import PlantParams

PP = PlantParams()
F_L = 0.1


class TestNormalize:
    def test_mvc_maps_to_one(self):
        assert normalize(2.2, 2.2) == 1.0

    def test_rest_maps_to_zero(self):
        assert normalize(0.0, 1.5) == 0.0

    def test_clamps_above_mvc(self):
        assert normalize(1.25 * 2.0, 2.0) == 1.0

    def test_rejects_nonpositive_mvc(self):
        with pytest.raises(ValueError):
            normalize(1.0, 0.0)
        with pytest.raises(ValueError):
            MvcCalibration(flex_mvc=1.0, ext_mvc=-1.0)


class TestProportionalCommand:
    def test_full_activation_hits_motor_max(self):
        out = proportional_command(OperatorInput(flex=1.0, ext=0.0), F_L, PP)
        assert out == pytest.approx(7.0, rel=1e-12)

    def test_antagonist_cancellation(self):
        assert proportional_command(OperatorInput(flex=0.4, ext=0.4), F_L, PP) == 0.0

    def test_hand_evaluated_midpoint(self):
        out = proportional_command(OperatorInput(flex=0.55, ext=0.0), F_L, PP)
        assert out == pytest.approx(4.25, rel=1e-12)

    def test_below_threshold_silent(self):
        assert proportional_command(OperatorInput(flex=0.1, ext=0.0), F_L, PP) == 0.0

    def test_continuity_at_threshold_from_above(self):
        eps = 1e-9
        out = proportional_command(OperatorInput(flex=F_L + eps, ext=0.0), F_L, PP)
        assert out == pytest.approx(PP.motor_deadband, abs=1e-6)

    @given(
        flex=st.floats(0, 1, allow_nan=False),
        ext=st.floats(0, 1, allow_nan=False),
    )
    @settings(max_examples=300, deadline=None)
    def test_zero_or_in_band(self, flex, ext):
        out = proportional_command(OperatorInput(flex=flex, ext=ext), F_L, PP)
        assert out == 0.0 or 1.5 <= abs(out) <= 7.0

    @given(
        flex=st.floats(0, 1, allow_nan=False),
        ext=st.floats(0, 1, allow_nan=False),
    )
    @settings(max_examples=300, deadline=None)
    def test_antisymmetry(self, flex, ext):
        a = proportional_command(OperatorInput(flex=flex, ext=ext), F_L, PP)
        b = proportional_command(OperatorInput(flex=ext, ext=flex), F_L, PP)
        assert a == pytest.approx(-b, abs=1e-12)

    def test_monotone_in_difference(self):
        diffs = np.linspace(0, 1, 101)
        outs = [
            proportional_command(OperatorInput(flex=float(d), ext=0.0), F_L, PP)
            for d in diffs
        ]
        assert all(b >= a for a, b in zip(outs, outs[1:]))

    def test_inverse_map_round_trip(self):
        # the deadband voltage itself maps to the threshold, which the forward
        # map treats as silent, so only strictly-above-deadband drives invert
        for volts in (1.6, 2.3, 4.25, 7.0):
            act = activation_for_motor(volts, F_L, PP)
            out = proportional_command(OperatorInput(flex=act, ext=0.0), F_L, PP)
            assert out == pytest.approx(volts, rel=1e-9)

    def test_rejects_bad_threshold(self):
        with pytest.raises(ValueError):
            proportional_command(OperatorInput(), 1.0, PP)


class TestTrackingAssessment:
    DT = 0.001

    def test_perfect_tracking(self):
        sig = np.full(5000, 0.25)
        rmse = tracking_assessment([0.25], sig, 5.0, self.DT)
        assert rmse[0] == 0.0

    def test_constant_offset(self):
        sig = np.full(5000, 0.30)
        rmse = tracking_assessment([0.25], sig, 5.0, self.DT)
        assert rmse[0] == pytest.approx(0.05, rel=1e-12)

    def test_square_wave_rms(self):
        # alternating level +/- 0.1 has RMS error exactly 0.1
        level = 0.25
        sig = np.tile([level + 0.1, level - 0.1], 2500)
        rmse = tracking_assessment([level], sig, 5.0, self.DT)
        assert rmse[0] == pytest.approx(0.1, rel=1e-12)

    def test_multiple_levels_windowing(self):
        levels = [0.125, 0.25, 0.375]
        sig = np.concatenate([np.full(5000, lv) for lv in levels])
        rmse = tracking_assessment(levels, sig, 5.0, self.DT)
        assert np.allclose(rmse, 0.0)

    def test_rejects_short_signal(self):
        with pytest.raises(ValueError):
            tracking_assessment([0.25, 0.5], np.zeros(5000), 5.0, self.DT)

    def test_rejects_bad_levels(self):
        with pytest.raises(ValueError):
            tracking_assessment([0.0], np.zeros(5000), 5.0, self.DT)
