import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from wheelsim.channels import Channel, ChannelClosed
from wheelsim.commands import Command
from wheelsim.gesture import (CalibrationOffsets, EmptyCalibrationError,
                              GestureThresholds, GyroSample,
                              apply_calibration, calibrate, classify_gesture,
                              controller_loop)

T = GestureThresholds()


def s(gx=0.0, gy=0.0, gz=0.0):
    return GyroSample(gx, gy, gz)


class TestCalibration:
    def test_offsets_are_per_axis_means(self):
        samples = [s(1.0, 2.0, 3.0), s(3.0, 6.0, 9.0)]
        off = calibrate(samples)
        assert (off.offset_x, off.offset_y, off.offset_z) == (2.0, 4.0, 6.0)
        assert off.sample_count == 2

    def test_empty_calibration_is_an_error(self):
        with pytest.raises(EmptyCalibrationError):
            calibrate([])

    def test_apply_calibration_subtracts(self):
        off = CalibrationOffsets(1.0, -2.0, 0.5, sample_count=1)
        out = apply_calibration(s(1.0, -2.0, 0.5), off)
        assert (out.gx, out.gy, out.gz) == (0.0, 0.0, 0.0)

    def test_samples_must_be_finite(self):
        with pytest.raises(ValueError):
            s(math.nan, 0.0, 0.0)
        with pytest.raises(ValueError):
            s(0.0, math.inf, 0.0)


class TestClassify:
    """The decision chain is ordered: F, B, R, L, then rest."""

    @pytest.mark.parametrize("sample,expected", [
        (s(gy=31.0), Command.FORWARD),
        (s(gy=-31.0), Command.BACKWARD),
        (s(gx=31.0), Command.RIGHT),
        (s(gx=-31.0), Command.LEFT),
        (s(), Command.STOP),
        (s(gy=30.0), Command.STOP),        # thresholds are strict
        (s(gy=-30.0), Command.STOP),
        (s(gx=30.0), Command.STOP),
        (s(gx=-30.0), Command.STOP),
        (s(gz=500.0), Command.STOP),       # yaw never drives
    ])
    def test_threshold_chain(self, sample, expected):
        assert classify_gesture(sample, T) is expected

    def test_forward_wins_over_right(self):
        assert classify_gesture(s(gx=45.0, gy=45.0), T) is Command.FORWARD

    def test_backward_wins_over_left(self):
        assert classify_gesture(s(gx=-45.0, gy=-45.0), T) is Command.BACKWARD

    def test_right_wins_over_left_is_impossible_by_sign(self):
        # Both roll thresholds cannot trip at once, the signs exclude it.
        assert classify_gesture(s(gx=45.0), T) is Command.RIGHT
        assert classify_gesture(s(gx=-45.0), T) is Command.LEFT

    def test_custom_thresholds_validate_signs(self):
        with pytest.raises(ValueError):
            GestureThresholds(forward=-10.0)
        with pytest.raises(ValueError):
            GestureThresholds(left=10.0)

    @given(
        gx=st.floats(-500, 500), gy=st.floats(-500, 500),
        bx=st.floats(-100, 100), by=st.floats(-100, 100),
    )
    def test_calibration_removes_any_static_bias(self, gx, gy, bx, by):
        """Classifying (signal + bias) after exact-bias calibration matches
        classifying the clean signal, away from the decision boundaries.

        The 1e-6 guard band covers float cancellation in (x + b) - b, which
        can move a value by a few ulps across a threshold.
        """
        margins = [abs(gy - T.forward), abs(gy - T.backward),
                   abs(gx - T.right), abs(gx - T.left)]
        if min(margins) < 1e-6:
            return
        off = CalibrationOffsets(bx, by, 0.0, sample_count=1)
        raw = s(gx + bx, gy + by)
        assert classify_gesture(apply_calibration(raw, off), T) \
            is classify_gesture(s(gx, gy), T)


class TestControllerLoop:
    def test_sends_one_command_per_sample_unconditionally(self):
        # Stop frames are transmitted too, not just movement.
        sink: Channel[Command] = Channel()
        samples = [s(gy=45.0), s(), s(gx=-45.0)]
        off = CalibrationOffsets(0.0, 0.0, 0.0, sample_count=1)
        stats = controller_loop(iter(samples), sink, off)
        assert stats.frames_sent == 3
        assert sink.drain() == [Command.FORWARD, Command.STOP, Command.LEFT]

    def test_closed_sink_ends_the_loop_cleanly(self):
        sink: Channel[Command] = Channel()
        sink.close()
        off = CalibrationOffsets(0.0, 0.0, 0.0, sample_count=1)
        stats = controller_loop(iter([s(), s()]), sink, off)
        assert stats.frames_sent == 0

    def test_transient_send_failure_is_counted_not_fatal(self):
        class FlakySink:
            def __init__(self):
                self.sent = []
                self.calls = 0

            def send(self, item):
                self.calls += 1
                if self.calls == 1:
                    raise RuntimeError("burp")
                self.sent.append(item)

        sink = FlakySink()
        off = CalibrationOffsets(0.0, 0.0, 0.0, sample_count=1)
        stats = controller_loop(iter([s(gy=45.0), s(gy=45.0)]), sink, off)
        assert stats.send_failures == 1
        assert stats.frames_sent == 1
        assert sink.sent == [Command.FORWARD]
