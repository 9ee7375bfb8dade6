import json
import math

import pytest

from robot_vitals import _kernels
from robot_vitals.telemetry import LaserScan, Pose2D, RobotParams, TelemetryFrame, TelemetryLog


@pytest.fixture(params=sorted(_kernels.available_backends()))
def kernels(request):
    return _kernels.available_backends()[request.param]


def make_frame(t, x=0.0, y=0.0, ox=None, oy=None, az=0.0, goal=(20.0, 0.0), ranges=None):
    ranges = ranges if ranges is not None else [5.0] * 360
    return TelemetryFrame(
        t=float(t),
        fused_pose=Pose2D(x, y, 0.0),
        raw_odom_pose=Pose2D(x if ox is None else ox, y if oy is None else oy, 0.0),
        accel_z=az,
        scan=LaserScan(tuple(ranges)),
        goal=Pose2D(*goal),
    )


def make_log(frames, params=None):
    return TelemetryLog(list(frames), params or RobotParams())


def record(t, x=0.0, y=0.0, az=0.0, ranges=None, **extra):
    rec = {"t": t, "fx": x, "fy": y, "fh": 0.0, "ox": x, "oy": y, "oh": 0.0, "az": az,
           "goal_x": 20.0, "goal_y": 0.0, "ranges": ranges or [5.0] * 16}
    rec.update(extra)
    return json.dumps(rec)


@pytest.fixture
def approach_log():
    """Twenty ticks of steady approach at nominal speed."""
    return make_log(make_frame(t, x=0.5 * t) for t in range(20))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
