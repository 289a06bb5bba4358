"""Vibration rendering tests: envelope law, carrier bound, disable pattern."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hapticgrip.haptics import (
    VibrationParams,
    disable_pulse,
    disable_pulse_active,
    vibration_amplitude,
    vibration_sample,
)


@pytest.fixture
def vp():
    return VibrationParams()


class TestEnvelope:
    def test_zero_at_threshold(self, vp):
        for t in np.linspace(0, 0.05, 13):
            assert vibration_sample(4.3, t, vp) == 0.0

    def test_silent_at_rest(self, vp):
        # load cell rests near 4.5 V: above the contact threshold, no vibration
        assert vibration_amplitude(4.5, vp) == 0.0

    def test_full_envelope_at_zero_load(self, vp):
        # peak of the sine at t = 1/(4*250) s
        t_peak = 1.0 / (4.0 * vp.carrier)
        assert vibration_sample(0.0, t_peak, vp) == pytest.approx(10.0, rel=1e-12)

    def test_half_scale(self, vp):
        assert vibration_amplitude(2.15, vp) == pytest.approx(5.0, rel=1e-12)

    def test_hand_evaluated_amplitude(self, vp):
        assert vibration_amplitude(3.0, vp) == pytest.approx(10.0 * 1.3 / 4.3, rel=1e-12)

    def test_strictly_decreasing_in_load(self, vp):
        loads = np.linspace(0.0, 4.3, 100)
        amps = [vibration_amplitude(l, vp) for l in loads]
        assert all(a > b for a, b in zip(amps, amps[1:]))

    @given(
        load=st.floats(0, 5, allow_nan=False),
        t=st.floats(0, 1, allow_nan=False),
    )
    @settings(max_examples=300, deadline=None)
    def test_sample_bounded_by_envelope(self, load, t):
        vp = VibrationParams()
        assert abs(vibration_sample(load, t, vp)) <= vibration_amplitude(load, vp) + 1e-12

    def test_envelope_attained_each_period(self, vp):
        load = 1.7
        amp = vibration_amplitude(load, vp)
        period = 1.0 / vp.carrier
        t = np.arange(0, period, period / 1000)
        samples = [vibration_sample(load, float(x), vp) for x in t]
        assert max(samples) == pytest.approx(amp, rel=1e-4)


class TestDisablePulse:
    def test_active_inside_first_burst(self, vp):
        assert disable_pulse_active(0.05, vp)
        # value is the full-amplitude carrier
        expected = 10.0 * math.sin(2 * math.pi * 250.0 * 0.05)
        assert disable_pulse(0.05, vp) == pytest.approx(expected, rel=1e-12)

    def test_silent_between_bursts(self, vp):
        assert not disable_pulse_active(0.2, vp)  # gap is [0.15, 0.30)
        assert disable_pulse(0.2, vp) == 0.0

    def test_second_burst_then_silence(self, vp):
        assert disable_pulse_active(0.35, vp)  # second burst [0.30, 0.45)
        assert not disable_pulse_active(0.50, vp)
        for t in (0.6, 1.0, 100.0):
            assert disable_pulse(t, vp) == 0.0

    def test_rejects_negative_time(self, vp):
        with pytest.raises(ValueError):
            disable_pulse(-0.1, vp)

    def test_pattern_length_scales_with_count(self):
        vp = VibrationParams(pulse_count=3, pulse_duration=0.1)
        assert disable_pulse_active(0.45, vp)  # third burst [0.4, 0.5)
        assert not disable_pulse_active(0.55, vp)


class TestValidation:
    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            VibrationParams(carrier=0.0)
        with pytest.raises(ValueError):
            VibrationParams(gain=-1.0)
        with pytest.raises(ValueError):
            VibrationParams(pulse_count=0)
