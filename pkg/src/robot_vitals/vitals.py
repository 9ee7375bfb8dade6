"""The five robot vitals and their probability-of-suffering transfer functions.

Each vital turns a 1 Hz telemetry stream into a scalar (``raw``) and maps it
to a probability that the robot is suffering:

* goal progress: matched-filter similarity of the goal-distance rate to a
  steady approach, through a decreasing sigmoid;
* jerk: rate of change of vertical acceleration, through an inverted bell;
* localisation error: seconds the raw/fused disagreement keeps changing,
  through a saturating ramp;
* velocity: seconds the speed stays trivial or above the maximum, through an
  increasing sigmoid;
* laser noise: fast noise estimate of the scan viewed as a square image,
  through an increasing sigmoid.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .telemetry import LaserScan, Pose2D, RobotParams, TelemetryFrame, TelemetryLog


class VitalId(str, enum.Enum):
    GOAL_PROGRESS = "goal_progress"
    JERK = "jerk"
    LOCALISATION_ERROR = "localisation_error"
    VELOCITY = "velocity"
    LASER_NOISE = "laser_noise"


@dataclass(frozen=True)
class VitalConfig:
    goal_a: float = -6.0
    goal_b: float = -0.15
    goal_window: int = 5
    # d_event above +similarity is "healthy approach", below -similarity "dissimilar";
    # informational, the sigmoid itself carries the decision
    goal_similarity: float = 0.3
    jerk_sigma1: float = 0.4
    jerk_sigma2: float = -0.9
    jerk_topple: float = 0.5
    loc_k: float = 0.2
    loc_saturation: float = 5.0
    loc_epsilon: float = 0.02
    vel_a: float = 1.5
    vel_b: float = 2.5
    noise_a: float = 5.0
    noise_b: float = 1.0

    def __post_init__(self) -> None:
        for name, value in vars(self).items():
            if not math.isfinite(value):
                raise ValueError(f"VitalConfig.{name} must be finite")
        if self.goal_window < 2 or int(self.goal_window) != self.goal_window:
            raise ValueError("goal_window must be an integer >= 2")
        if self.loc_epsilon <= 0.0:
            raise ValueError("loc_epsilon must be positive")
        if self.jerk_sigma1 == 0.0 or self.jerk_sigma2 == 0.0:
            raise ValueError("jerk sigmas must be non-zero")


@dataclass(frozen=True, slots=True)
class VitalReading:
    id: VitalId
    t: float
    raw: float
    p_suffering: float
    available: bool = True


class EventCounter:
    """Consecutive-seconds counter for one predicate; resets on the first false tick."""

    def __init__(self, predicate: str = ""):
        self.predicate = predicate
        self.consecutive_seconds = 0

    def update(self, flag: bool) -> int:
        self.consecutive_seconds = self.consecutive_seconds + 1 if flag else 0
        return self.consecutive_seconds


def _sigmoid(x: float, a: float, b: float) -> float:
    # 1 / (1 + exp(-a x + a b)), evaluated without overflow
    z = -a * x + a * b
    if z >= 0.0:
        e = math.exp(-z)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(z))


# -- goal progress -----------------------------------------------------------

def distance_to_goal(pose: Pose2D, goal: Pose2D) -> float:
    return math.hypot(goal.x - pose.x, goal.y - pose.y)


def matched_filter_event(window: Sequence[float], params: RobotParams,
                         cfg: VitalConfig = VitalConfig()) -> float:
    """Correlate a goal-distance-rate window with a steady-approach template.

    The template is ``W`` copies of ``-v_nominal``; the correlation is
    normalised by the template energy and clamped to [-1, 1], so a steady
    approach scores +1, standing still 0 and a steady retreat -1.
    """
    if len(window) != cfg.goal_window:
        raise ValueError(f"window length {len(window)} != {cfg.goal_window}")
    h = -params.v_nominal
    num = math.fsum(x * h for x in window)
    den = cfg.goal_window * h * h
    return min(1.0, max(-1.0, num / den))


def p_suffer_goal_progress(d_event: float, cfg: VitalConfig = VitalConfig()) -> float:
    return _sigmoid(d_event, cfg.goal_a, cfg.goal_b)


# -- jerk ----------------------------------------------------------------------

def jerk_signal(accel_z_1hz: Sequence[float]) -> list[float]:
    if len(accel_z_1hz) < 2:
        raise ValueError("need two samples")
    return [b - a for a, b in zip(accel_z_1hz, accel_z_1hz[1:])]


def p_suffer_jerk(jerk: float, cfg: VitalConfig = VitalConfig()) -> float:
    peak = 1.0 / (math.sqrt(2.0 * math.pi) * cfg.jerk_sigma1)
    return 1.0 - peak * math.exp(-(0.5 / cfg.jerk_sigma2 ** 2) * jerk * jerk)


# -- localisation error ------------------------------------------------------

def localisation_error(raw: Pose2D, fused: Pose2D) -> float:
    return math.hypot(raw.x - fused.x, raw.y - fused.y)


def consecutive_event_seconds(flags: Sequence[bool]) -> list[int]:
    return [int(v) for v in _kernels.run_lengths(np.asarray(flags, dtype=np.uint8))]


def p_suffer_localisation(t_event: float, cfg: VitalConfig = VitalConfig()) -> float:
    if t_event < 0:
        raise ValueError("t_event must be >= 0")
    if t_event >= cfg.loc_saturation:
        return 1.0
    return min(1.0, cfg.loc_k * t_event)


# -- velocity ------------------------------------------------------------------

def speed_series(fused_poses: Sequence[Pose2D], dt: float = 1.0) -> list[float]:
    if len(fused_poses) < 2:
        raise ValueError("need two samples")
    return [math.hypot(b.x - a.x, b.y - a.y) / dt for a, b in zip(fused_poses, fused_poses[1:])]


def p_suffer_velocity(t_event: float, cfg: VitalConfig = VitalConfig()) -> float:
    return _sigmoid(t_event, cfg.vel_a, cfg.vel_b)


# -- laser noise -----------------------------------------------------------------

def scan_to_square_image(scan: LaserScan) -> np.ndarray:
    """Lay the sanitised ranges out row-major in the smallest square that fits.

    Cells past the last range repeat the last range so that padding adds no
    artificial edges.
    """
    r = scan.sanitized()
    n = r.size
    if n < 9:
        raise ValueError("scan too short")
    side = math.isqrt(n - 1) + 1
    img = np.full(side * side, r[-1], dtype=np.float64)
    img[:n] = r
    return img.reshape(side, side)


def noise_variance(image: np.ndarray) -> float:
    """Immerkaer's fast noise estimate over the valid interior of ``image``."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] < 3 or img.shape[1] < 3:
        raise ValueError("image must be 2D with both sides >= 3")
    h, w = img.shape
    total = _kernels.immerkaer_abs_sum(img)
    return math.sqrt(math.pi / 2.0) * total / (6.0 * (w - 2) * (h - 2))


def p_suffer_noise(score: float, cfg: VitalConfig = VitalConfig()) -> float:
    return _sigmoid(score, cfg.noise_a, cfg.noise_b)


# -- composition ---------------------------------------------------------------

class VitalsEngine:
    """Per-stream vitals state; feed 1 Hz frames in time order.

    One instance per log stream. ``jerk_enabled=False`` drops the jerk vital
    (robots without an IMU); a frame with no ``accel_z`` disables it from that
    frame on.
    """

    def __init__(self, params: RobotParams = RobotParams(),
                 cfg: VitalConfig = VitalConfig(), jerk_enabled: bool = True):
        self.params = params
        self.cfg = cfg
        self.jerk_enabled = jerk_enabled
        self._prev: TelemetryFrame | None = None
        self._prev_dist: float | None = None
        self._prev_loc: float | None = None
        self._dg_dot: deque[float] = deque(maxlen=cfg.goal_window)
        self._loc_counter = EventCounter("|d loc_err/dt| > eps")
        self._vel_counter = EventCounter("speed trivial or above max")

    def push(self, frame: TelemetryFrame) -> list[VitalReading]:
        cfg, params, t = self.cfg, self.params, frame.t
        prev = self._prev
        out = []

        dist = distance_to_goal(frame.fused_pose, frame.goal)
        if self._prev_dist is not None:
            self._dg_dot.append(dist - self._prev_dist)
        self._prev_dist = dist
        if len(self._dg_dot) == cfg.goal_window:
            d_event = matched_filter_event(list(self._dg_dot), params, cfg)
            out.append(VitalReading(VitalId.GOAL_PROGRESS, t, d_event,
                                    p_suffer_goal_progress(d_event, cfg)))
        else:
            out.append(VitalReading(VitalId.GOAL_PROGRESS, t, math.nan, 0.0, False))

        if frame.accel_z is None:
            self.jerk_enabled = False
        if self.jerk_enabled and prev is not None and prev.accel_z is not None:
            jerk = frame.accel_z - prev.accel_z
            out.append(VitalReading(VitalId.JERK, t, jerk, p_suffer_jerk(jerk, cfg)))
        else:
            out.append(VitalReading(VitalId.JERK, t, math.nan, 0.0, False))

        loc = localisation_error(frame.raw_odom_pose, frame.fused_pose)
        moving_err = self._prev_loc is not None and abs(loc - self._prev_loc) > cfg.loc_epsilon
        self._prev_loc = loc
        t_loc = self._loc_counter.update(moving_err)
        out.append(VitalReading(VitalId.LOCALISATION_ERROR, t, float(t_loc),
                                p_suffer_localisation(t_loc, cfg)))

        flagged = False
        if prev is not None:
            speed = speed_series([prev.fused_pose, frame.fused_pose], max(t - prev.t, 1e-9))[0]
            flagged = speed <= params.v_trivial or speed >= params.v_max
        t_vel = self._vel_counter.update(flagged)
        out.append(VitalReading(VitalId.VELOCITY, t, float(t_vel), p_suffer_velocity(t_vel, cfg)))

        score = noise_variance(scan_to_square_image(frame.scan))
        out.append(VitalReading(VitalId.LASER_NOISE, t, score, p_suffer_noise(score, cfg)))

        self._prev = frame
        return out


def compute_vitals(log: TelemetryLog, cfg: VitalConfig = VitalConfig()) -> list[list[VitalReading]]:
    """Five readings per tick for a log already resampled to 1 Hz."""
    engine = VitalsEngine(log.params, cfg, jerk_enabled=log.has_accel)
    return [engine.push(frame) for frame in log.frames]
