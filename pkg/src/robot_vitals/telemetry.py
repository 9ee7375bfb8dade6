"""Telemetry data model, JSONL log format and preprocessing primitives.

A log is newline-delimited JSON. The optional first record is a header
carrying robot parameters; every other record is one frame::

    {"header": {"v_nominal": 0.5, "v_max": 1.0, "range_max": 30.0}}
    {"t": 0.0, "fx": 0.0, "fy": 0.0, "fh": 0.0, "ox": 0.0, "oy": 0.0,
     "oh": 0.0, "az": 0.0, "goal_x": 20.0, "goal_y": 0.0, "ranges": [...]}

``az`` may be ``null``. Timestamps are trial-relative seconds.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from typing import IO, Iterable, Iterator, Sequence

import numpy as np

TIME_EPS = 1e-9


class TelemetryError(ValueError):
    """Base class for telemetry input problems."""


class LogParseError(TelemetryError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class LogValidationError(TelemetryError):
    pass


class InsufficientDurationError(TelemetryError):
    pass


def wrap_angle(a: float) -> float:
    """Normalise an angle to (-pi, pi]."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


@dataclass(frozen=True, slots=True)
class Pose2D:
    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.heading)):
            raise ValueError(f"non-finite pose {self.x}, {self.y}, {self.heading}")
        object.__setattr__(self, "heading", wrap_angle(self.heading))


@dataclass(frozen=True, slots=True)
class LaserScan:
    ranges: tuple[float, ...]
    range_max: float = 30.0

    def sanitized(self) -> np.ndarray:
        """Ranges with no-returns mapped to ``range_max`` and clamped to [0, range_max]."""
        r = np.asarray(self.ranges, dtype=np.float64)
        r = np.where(np.isfinite(r), r, self.range_max)
        return np.clip(r, 0.0, self.range_max)


@dataclass(frozen=True, slots=True)
class RobotParams:
    v_nominal: float = 0.5
    v_max: float = 1.0
    v_trivial: float = 0.01
    sample_rate: float = 1.0
    range_max: float = 30.0

    def __post_init__(self) -> None:
        if not 0.0 < self.v_trivial < self.v_nominal <= self.v_max:
            raise ValueError("RobotParams require 0 < v_trivial < v_nominal <= v_max")
        if self.sample_rate <= 0.0 or self.range_max <= 0.0:
            raise ValueError("sample_rate and range_max must be positive")


@dataclass(frozen=True, slots=True)
class TelemetryFrame:
    t: float
    fused_pose: Pose2D
    raw_odom_pose: Pose2D
    accel_z: float | None
    scan: LaserScan
    goal: Pose2D


@dataclass(slots=True)
class TelemetryLog:
    frames: list[TelemetryFrame]
    params: RobotParams = field(default_factory=RobotParams)

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def has_accel(self) -> bool:
        return all(f.accel_z is not None for f in self.frames)


# -- serialisation -----------------------------------------------------------

_FRAME_KEYS = ("t", "fx", "fy", "fh", "ox", "oy", "oh", "az", "goal_x", "goal_y", "ranges")
_PARAM_KEYS = {f.name for f in fields(RobotParams)}


def _num(rec: dict, key: str, line_no: int) -> float:
    if key not in rec:
        raise LogParseError(line_no, f"missing field {key!r}")
    v = rec[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise LogParseError(line_no, f"field {key!r} is not a number")
    return float(v)


def frame_from_record(rec: dict, line_no: int = 0,
                      params: RobotParams | None = None) -> TelemetryFrame:
    """Build a frame from one decoded JSON record."""
    params = params or RobotParams()
    if not isinstance(rec, dict):
        raise LogParseError(line_no, "record is not an object")
    t = _num(rec, "t", line_no)
    az = rec.get("az")
    if az is not None:
        az = _num(rec, "az", line_no)
    ranges = rec.get("ranges")
    if not isinstance(ranges, list):
        raise LogParseError(line_no, "field 'ranges' must be a list")
    try:
        ranges_t = tuple(float("nan") if r is None else float(r) for r in ranges)
    except (TypeError, ValueError):
        raise LogParseError(line_no, "field 'ranges' holds a non-number") from None
    if len(ranges_t) < 9:
        raise LogParseError(line_no, "scan too short (need at least 9 ranges)")
    try:
        return TelemetryFrame(
            t=t,
            fused_pose=Pose2D(_num(rec, "fx", line_no), _num(rec, "fy", line_no),
                              _num(rec, "fh", line_no)),
            raw_odom_pose=Pose2D(_num(rec, "ox", line_no), _num(rec, "oy", line_no),
                                 _num(rec, "oh", line_no)),
            accel_z=az,
            scan=LaserScan(ranges_t, params.range_max),
            goal=Pose2D(_num(rec, "goal_x", line_no), _num(rec, "goal_y", line_no)),
        )
    except ValueError as exc:
        if isinstance(exc, LogParseError):
            raise
        raise LogParseError(line_no, str(exc)) from None


def frame_to_record(frame: TelemetryFrame) -> dict:
    return {
        "t": frame.t,
        "fx": frame.fused_pose.x, "fy": frame.fused_pose.y, "fh": frame.fused_pose.heading,
        "ox": frame.raw_odom_pose.x, "oy": frame.raw_odom_pose.y, "oh": frame.raw_odom_pose.heading,
        "az": frame.accel_z,
        "goal_x": frame.goal.x, "goal_y": frame.goal.y,
        "ranges": [r if math.isfinite(r) else None for r in frame.scan.ranges],
    }


def params_from_header(header: dict, line_no: int = 1) -> RobotParams:
    if not isinstance(header, dict):
        raise LogParseError(line_no, "header must be an object")
    unknown = set(header) - _PARAM_KEYS
    if unknown:
        raise LogParseError(line_no, f"unknown header field {sorted(unknown)[0]!r}")
    try:
        return RobotParams(**{k: _num(header, k, line_no) for k in header})
    except ValueError as exc:
        if isinstance(exc, LogParseError):
            raise
        raise LogParseError(line_no, str(exc)) from None


def _decode_lines(lines: Iterable[str | bytes]) -> Iterator[tuple[int, dict]]:
    for line_no, raw in enumerate(lines, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        raw = raw.strip()
        if not raw:
            continue
        try:
            yield line_no, json.loads(raw)
        except json.JSONDecodeError as exc:
            raise LogParseError(line_no, f"invalid JSON ({exc.msg})") from None


def parse_log(data: bytes | str | IO) -> TelemetryLog:
    """Parse a JSONL telemetry log.

    Raises ``LogParseError`` (with the line number) on malformed records and
    ``LogValidationError`` for an empty stream or non-increasing timestamps.
    """
    if isinstance(data, (bytes, str)):
        lines = data.splitlines()
    else:
        lines = data
    params = RobotParams()
    frames: list[TelemetryFrame] = []
    for line_no, rec in _decode_lines(lines):
        if isinstance(rec, dict) and "header" in rec:
            if frames:
                raise LogParseError(line_no, "header record after first frame")
            params = params_from_header(rec["header"], line_no)
            continue
        frames.append(frame_from_record(rec, line_no, params))
    if not frames:
        raise LogValidationError("no frames")
    for prev, cur in zip(frames, frames[1:]):
        if not cur.t > prev.t:
            raise LogValidationError(f"timestamps not strictly increasing at t={cur.t}")
    if frames[0].t < 0.0:
        raise LogValidationError("negative timestamp")
    return TelemetryLog(frames, params)


def dump_log(log: TelemetryLog, out: IO[str], header: bool = True) -> None:
    """Write ``log`` as JSONL; the header record is included by default."""
    if header:
        p = log.params
        out.write(json.dumps({"header": {k: getattr(p, k) for k in sorted(_PARAM_KEYS)}}) + "\n")
    for frame in log.frames:
        out.write(json.dumps(frame_to_record(frame)) + "\n")


# -- preprocessing -----------------------------------------------------------

def rolling_mean(series: Sequence[float], window: int) -> list[float]:
    """Trailing mean with a left-truncated warm-up; output keeps the input length."""
    if window < 1:
        raise ValueError("window must be >= 1")
    out = []
    for i in range(len(series)):
        chunk = series[max(0, i - window + 1):i + 1]
        out.append(math.fsum(chunk) / len(chunk))
    return out


def finite_difference(series: Sequence[float], dt: float = 1.0) -> list[float]:
    if len(series) < 2:
        raise ValueError("need two samples")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    return [(b - a) / dt for a, b in zip(series, series[1:])]


class Resampler:
    """Online zero-order-hold resampler to 1 Hz ticks.

    ``push`` returns the ticks that became final with the new frame. A tick
    ``k`` is final once a frame with ``t >= k`` has arrived. The vertical
    acceleration of a tick is the mean of raw samples in ``(k-1, k]``, or the
    held value when that second holds no sample.
    """

    def __init__(self) -> None:
        self._last: TelemetryFrame | None = None
        self._next_tick: int | None = None
        self._accel_buf: list[tuple[float, float]] = []

    def push(self, frame: TelemetryFrame) -> list[TelemetryFrame]:
        if self._last is not None and not frame.t > self._last.t:
            raise LogValidationError(f"timestamps not strictly increasing at t={frame.t}")
        if self._next_tick is None:
            self._next_tick = math.ceil(frame.t - TIME_EPS)
        out = []
        # ticks strictly before this frame hold the previous frame
        while self._last is not None and self._next_tick < frame.t - TIME_EPS:
            out.append(self._emit(self._next_tick, self._last))
            self._next_tick += 1
        self._last = frame
        if frame.accel_z is not None:
            self._accel_buf.append((frame.t, frame.accel_z))
        if abs(frame.t - self._next_tick) <= TIME_EPS:
            out.append(self._emit(self._next_tick, frame))
            self._next_tick += 1
        return out

    def _emit(self, tick: int, held: TelemetryFrame) -> TelemetryFrame:
        accel = held.accel_z
        if accel is not None:
            lo = tick - 1.0 + TIME_EPS
            hi = tick + TIME_EPS
            window = [a for (ts, a) in self._accel_buf if lo < ts <= hi]
            if window:
                accel = math.fsum(window) / len(window)
            self._accel_buf = [(ts, a) for (ts, a) in self._accel_buf if ts > lo]
        return replace(held, t=float(tick), accel_z=accel)


def resample_1hz(log: TelemetryLog) -> TelemetryLog:
    """Resample ``log`` onto integer-second ticks (zero-order hold)."""
    if not log.frames:
        raise LogValidationError("no frames")
    if log.frames[-1].t - log.frames[0].t < 1.0 - TIME_EPS:
        raise InsufficientDurationError("insufficient duration")
    rs = Resampler()
    out: list[TelemetryFrame] = []
    for frame in log.frames:
        out.extend(rs.push(frame))
    if not log.has_accel:
        out = [replace(f, accel_z=None) for f in out]
    return TelemetryLog(out, replace(log.params, sample_rate=1.0))
