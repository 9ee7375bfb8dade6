import io
import math

import pytest
from hypothesis import given, strategies as st

from robot_vitals.telemetry import (InsufficientDurationError, LaserScan, LogParseError,
                                    LogValidationError, Pose2D, RobotParams, dump_log,
                                    finite_difference, parse_log, resample_1hz, rolling_mean)

from conftest import make_frame, make_log, record


class TestParseLog:
    def test_empty_stream(self):
        with pytest.raises(LogValidationError, match="no frames"):
            parse_log(b"")

    def test_two_frames(self):
        log = parse_log("\n".join([record(0), record(1)]).encode())
        assert len(log) == 2
        assert log.params == RobotParams()

    def test_out_of_order(self):
        with pytest.raises(LogValidationError):
            parse_log("\n".join([record(1), record(0)]))

    def test_malformed_line_number(self):
        text = "\n".join([record(0), "{not json", record(2)])
        with pytest.raises(LogParseError) as exc:
            parse_log(text)
        assert exc.value.line_no == 2
        assert "line 2" in str(exc.value)

    def test_missing_field(self):
        with pytest.raises(LogParseError, match="fx"):
            parse_log('{"t": 0, "fy": 0, "ranges": [1, 1, 1, 1, 1, 1, 1, 1, 1]}')

    def test_header_and_null_accel(self):
        text = "\n".join(['{"header": {"v_nominal": 0.4, "range_max": 10}}',
                          record(0, az=None), record(1, az=None)])
        log = parse_log(text)
        assert log.params.v_nominal == 0.4
        assert log.params.range_max == 10
        assert not log.has_accel

    def test_unknown_header_field(self):
        with pytest.raises(LogParseError, match="bogus"):
            parse_log('{"header": {"bogus": 1}}\n' + record(0))

    def test_null_range_is_no_return(self):
        ranges = [5.0] * 15 + [None]
        log = parse_log(record(0, ranges=ranges))
        assert math.isnan(log.frames[0].scan.ranges[-1])
        assert log.frames[0].scan.sanitized()[-1] == log.params.range_max

    def test_roundtrip(self, approach_log):
        buf = io.StringIO()
        dump_log(approach_log, buf)
        again = parse_log(buf.getvalue())
        assert again.frames == approach_log.frames
        assert again.params == approach_log.params


class TestResample:
    def test_10hz_over_5s(self):
        log = make_log(make_frame(i / 10, x=i / 100) for i in range(51))
        out = resample_1hz(log)
        assert [f.t for f in out.frames] == [0, 1, 2, 3, 4, 5]
        # zero-order hold picks the sample at the tick
        assert out.frames[3].fused_pose.x == pytest.approx(0.3)

    def test_1hz_identity(self, approach_log):
        assert resample_1hz(approach_log).frames == approach_log.frames

    def test_constant_pose_4hz(self):
        log = make_log(make_frame(i / 4, x=1.5, y=-2.0) for i in range(13))
        out = resample_1hz(log)
        assert len(out) == 4
        assert all(f.fused_pose == Pose2D(1.5, -2.0, 0.0) for f in out.frames)

    def test_idempotent(self):
        log = make_log(make_frame(i * 0.3, x=i * 0.1, az=math.sin(i)) for i in range(30))
        once = resample_1hz(log)
        assert resample_1hz(once).frames == once.frames

    def test_accel_is_mean_of_preceding_second(self):
        az = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]
        log = make_log(make_frame(i / 4, az=a) for i, a in enumerate(az))
        out = resample_1hz(log)
        # tick 1 averages samples at 0.25, 0.5, 0.75, 1.0
        assert out.frames[1].accel_z == pytest.approx(2.5)
        assert out.frames[2].accel_z == pytest.approx(6.5)

    def test_zero_order_hold_between_sparse_samples(self):
        log = make_log([make_frame(0, x=0.0), make_frame(2.5, x=1.0), make_frame(3.0, x=2.0)])
        out = resample_1hz(log)
        assert [f.fused_pose.x for f in out.frames] == [0.0, 0.0, 0.0, 2.0]

    def test_insufficient_duration(self):
        log = make_log([make_frame(0), make_frame(0.5)])
        with pytest.raises(InsufficientDurationError, match="insufficient duration"):
            resample_1hz(log)

    def test_missing_accel_disables_all(self):
        frames = [make_frame(t) for t in range(4)]
        frames[2] = make_frame(2, az=None)
        out = resample_1hz(make_log(frames))
        assert all(f.accel_z is None for f in out.frames)


class TestRollingMean:
    def test_constant(self):
        assert rolling_mean([1, 1, 1], 2) == [1, 1, 1]

    def test_two_point(self):
        assert rolling_mean([0, 2], 2) == [0, 1]

    def test_sliding(self):
        assert rolling_mean([1, 2, 3, 4], 2) == [1, 1.5, 2.5, 3.5]

    def test_zero_window(self):
        with pytest.raises(ValueError):
            rolling_mean([1.0], 0)

    @given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=40), st.integers(1, 10))
    def test_length_and_bounds(self, xs, w):
        out = rolling_mean(xs, w)
        assert len(out) == len(xs)
        tol = 1e-9 * max(1.0, max(abs(v) for v in xs))
        assert all(min(xs) - tol <= v <= max(xs) + tol for v in out)


class TestFiniteDifference:
    def test_arithmetic(self):
        assert finite_difference([0, 1, 3], 1) == [1, 2]

    def test_constant(self):
        assert finite_difference([4.0] * 5, 0.5) == [0.0] * 4

    def test_negative(self):
        assert finite_difference([5, 3], 2) == [-1]

    def test_too_short(self):
        with pytest.raises(ValueError, match="need two samples"):
            finite_difference([1.0], 1.0)

    @given(st.floats(-100, 100), st.floats(0.01, 10), st.integers(2, 20))
    def test_ramp(self, k, dt, n):
        series = [k * i * dt for i in range(n)]
        assert all(v == pytest.approx(k, abs=1e-9 * (1 + abs(k)) * n) for v in finite_difference(series, dt))


class TestTypes:
    def test_heading_wrapped(self):
        assert Pose2D(0, 0, 3 * math.pi).heading == pytest.approx(math.pi)
        assert Pose2D(0, 0, -math.pi).heading == pytest.approx(math.pi)

    def test_nonfinite_pose(self):
        with pytest.raises(ValueError):
            Pose2D(math.nan, 0.0)

    def test_params_invariant(self):
        with pytest.raises(ValueError):
            RobotParams(v_nominal=2.0, v_max=1.0)

    def test_sanitize(self):
        scan = LaserScan((math.inf, -1.0, 50.0, 2.0), range_max=30.0)
        assert list(scan.sanitized()) == [30.0, 0.0, 30.0, 2.0]
