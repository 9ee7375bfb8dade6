"""1 Hz unicycle simulator with degradation injectors.

The simulator stands in for the navigation trials: a robot drives from a
start pose to a goal at nominal speed while injectors perturb its motion
and sensors. Every emitted frame goes through the vitals and health
engines online, so a trial yields both its completion time and its health
trace.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _kernels
from .health import (AlertDetector, AlertEvent, HealthConfig, HealthEngine, HealthSample,
                     average_health)
from .telemetry import LaserScan, Pose2D, RobotParams, TelemetryFrame, TelemetryLog, wrap_angle
from .vitals import VitalConfig, VitalsEngine, distance_to_goal

GOAL_TOLERANCE = 0.3
STALL_LIMIT = 30
GOAL_RESET_AFTER = 10
TURN_RATE = 1.0
POSE_JITTER_STD = 0.005
# fused estimates are filtered, so jitter is a stationary AR(1) with this lag-1 correlation
POSE_JITTER_CORR = 0.95
SCAN_BEAMS = 360
SCAN_RANGE = 5.0
NOISE_BASE_STD = 0.2


class SimError(RuntimeError):
    pass


class ScenarioError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class InjectorKind(str, enum.Enum):
    NOISE_BURST = "NoiseBurst"
    STUCK_EPISODE = "StuckEpisode"
    SLIP_EPISODE = "SlipEpisode"
    JERK_PULSE = "JerkPulse"
    HIGH_FRICTION_ZONE = "HighFrictionZone"


@dataclass(frozen=True)
class Injector:
    """One time-windowed perturbation.

    ``intensity`` means: noise scale (NoiseBurst), speed factor
    (HighFrictionZone), odometry drift in m/s (SlipEpisode), vertical
    acceleration in m/s^2 (JerkPulse); StuckEpisode ignores it.
    """

    kind: InjectorKind
    t_start: float
    duration: float
    intensity: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", InjectorKind(self.kind))
        if not self.duration > 0.0:
            raise ValueError("injector duration must be positive")
        if self.intensity < 0.0:
            raise ValueError("injector intensity must be >= 0")

    def active(self, t: float) -> bool:
        return self.t_start <= t < self.t_start + self.duration


@dataclass(frozen=True)
class ScenarioConfig:
    start: Pose2D = Pose2D(0.0, 0.0, 0.0)
    goal: Pose2D = Pose2D(20.0, 0.0, 0.0)
    params: RobotParams = RobotParams()
    seed: int = 0
    max_duration: float = 300.0
    injectors: tuple[Injector, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "injectors", tuple(self.injectors))
        if self.start.x == self.goal.x and self.start.y == self.goal.y:
            raise ValueError("start and goal coincide")
        if not self.max_duration > 0.0:
            raise ValueError("max_duration must be positive")


@dataclass
class SimState:
    true_pose: Pose2D
    fused_pose: Pose2D
    raw_odom_pose: Pose2D
    accel_z: float
    t: int
    rng: np.random.Generator
    jitter: np.ndarray = field(default_factory=lambda: np.zeros(2))
    goal_resets: int = 0
    stall_clock: int = 0
    reset_used: bool = False
    last_speed: float = 0.0


@dataclass
class TrialResult:
    completed: bool
    T_comp: float
    avg_health: float
    health_series: list[HealthSample]
    log: TelemetryLog
    alerts: list[AlertEvent] = field(default_factory=list)
    goal_resets: int = 0


def box_muller(u1: float, u2: float) -> float:
    """Standard normal deviate from u1 in (0, 1] and u2 in [0, 1)."""
    if not 0.0 < u1 <= 1.0:
        raise ValueError("u1 must lie in (0, 1]")
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def gaussian(rng: np.random.Generator, n: int) -> np.ndarray:
    """``n`` standard normals by Box-Muller from the generator's uniforms."""
    u = rng.random(2 * n)
    return _kernels.box_muller(1.0 - u[:n], u[n:])


# -- stepping ------------------------------------------------------------------

def _observe(true: Pose2D, raw: Pose2D, accel: float, t: int, noise_scale: float,
             scenario: ScenarioConfig, rng: np.random.Generator,
             jitter: np.ndarray) -> tuple[Pose2D, TelemetryFrame]:
    fused = Pose2D(true.x + jitter[0], true.y + jitter[1], true.heading)
    z = gaussian(rng, SCAN_BEAMS)
    ranges = SCAN_RANGE + NOISE_BASE_STD * noise_scale * z
    scan = LaserScan(tuple(float(r) for r in ranges), scenario.params.range_max)
    frame = TelemetryFrame(float(t), fused, raw, accel, scan, scenario.goal)
    return fused, frame


def _active_effects(scenario: ScenarioConfig, t: float) -> dict:
    eff = {"stuck": False, "slip": 0.0, "slipping": False, "friction": 1.0,
           "jerk": 0.0, "noise_var": 0.0}
    for inj in scenario.injectors:
        if not inj.active(t):
            continue
        if inj.kind is InjectorKind.STUCK_EPISODE:
            eff["stuck"] = True
        elif inj.kind is InjectorKind.SLIP_EPISODE:
            eff["slipping"] = True
            eff["slip"] += inj.intensity
        elif inj.kind is InjectorKind.HIGH_FRICTION_ZONE:
            eff["friction"] *= inj.intensity
        elif inj.kind is InjectorKind.JERK_PULSE:
            eff["jerk"] += inj.intensity
        elif inj.kind is InjectorKind.NOISE_BURST:
            eff["noise_var"] += inj.intensity ** 2
    return eff


def initial_state(scenario: ScenarioConfig) -> tuple[SimState, TelemetryFrame]:
    rng = np.random.default_rng(scenario.seed)
    eff = _active_effects(scenario, 0.0)
    jitter = gaussian(rng, 2) * POSE_JITTER_STD
    fused, frame = _observe(scenario.start, scenario.start, eff["jerk"], 0,
                            math.sqrt(eff["noise_var"]), scenario, rng, jitter)
    state = SimState(scenario.start, fused, scenario.start, eff["jerk"], 0, rng, jitter)
    return state, frame


def step(state: SimState, scenario: ScenarioConfig) -> tuple[SimState, TelemetryFrame]:
    """Advance one second. ``state`` is updated in place and returned."""
    if state.t >= scenario.max_duration:
        raise SimError("trial exhausted")
    eff = _active_effects(scenario, state.t)
    pose, goal = state.true_pose, scenario.goal

    desired = math.atan2(goal.y - pose.y, goal.x - pose.x)
    turn = max(-TURN_RATE, min(TURN_RATE, wrap_angle(desired - pose.heading)))
    heading = pose.heading + turn
    c, s = math.cos(heading), math.sin(heading)

    held = eff["stuck"] or eff["slipping"]
    v = 0.0 if held else scenario.params.v_nominal * eff["friction"]
    moved = min(v, distance_to_goal(pose, goal))
    true = Pose2D(pose.x + moved * c, pose.y + moved * s, heading)
    # odometry integrates wheel motion: spinning wheels count, a blocked drive does not
    odo = eff["slip"] if eff["slipping"] else moved
    raw = Pose2D(state.raw_odom_pose.x + odo * c, state.raw_odom_pose.y + odo * s, heading)

    t_next = state.t + 1
    # effects for the emitted frame's sensors are those active at the new tick
    eff_obs = _active_effects(scenario, t_next)
    innovation = gaussian(state.rng, 2) * POSE_JITTER_STD
    state.jitter = (POSE_JITTER_CORR * state.jitter
                    + math.sqrt(1.0 - POSE_JITTER_CORR ** 2) * innovation)
    fused, frame = _observe(true, raw, eff_obs["jerk"], t_next,
                            math.sqrt(eff_obs["noise_var"]), scenario, state.rng, state.jitter)

    if moved < scenario.params.v_trivial:
        state.stall_clock += 1
        if state.stall_clock >= GOAL_RESET_AFTER and not state.reset_used:
            state.goal_resets += 1
            state.reset_used = True
            state.stall_clock = 0
    else:
        state.stall_clock = 0
        state.reset_used = False

    state.true_pose, state.raw_odom_pose, state.fused_pose = true, raw, fused
    state.accel_z = eff_obs["jerk"]
    state.t = t_next
    state.last_speed = moved
    return state, frame


def run_trial(scenario: ScenarioConfig, vital_cfg: VitalConfig = VitalConfig(),
              health_cfg: HealthConfig = HealthConfig()) -> TrialResult:
    """Drive to the goal until arrival, a 30 s stall after one goal reset, or timeout."""
    vitals = VitalsEngine(scenario.params, vital_cfg)
    health = HealthEngine(health_cfg)
    alerts = AlertDetector(health_cfg)
    frames: list[TelemetryFrame] = []
    series: list[HealthSample] = []

    def consume(frame: TelemetryFrame) -> None:
        frames.append(frame)
        sample = health.push(frame.t, vitals.push(frame))
        series.append(sample)
        alerts.push(sample)

    state, frame = initial_state(scenario)
    consume(frame)
    completed = False
    while True:
        if distance_to_goal(state.true_pose, scenario.goal) <= GOAL_TOLERANCE:
            completed = True
            break
        if state.stall_clock >= STALL_LIMIT or state.t >= scenario.max_duration:
            break
        state, frame = step(state, scenario)
        consume(frame)
    alerts.finish()
    return TrialResult(
        completed=completed,
        T_comp=float(state.t),
        avg_health=average_health(series),
        health_series=series,
        log=TelemetryLog(frames, scenario.params),
        alerts=alerts.events,
        goal_resets=state.goal_resets,
    )


# -- degradation levels --------------------------------------------------------

@dataclass(frozen=True)
class Level:
    name: str
    noise_scale: float
    terrain: float


NOISE_LOW = 2.5
NOISE_HIGH = 4.5
NOISE_START = 7.0
NOISE_DURATION = 7.0

# ordered by increasing degradation; terrain dominates noise
LEVELS: dict[int, Level] = {
    0: Level("baseline", 0.0, 0.0),
    1: Level("low noise", NOISE_LOW, 0.0),
    2: Level("high noise", NOISE_HIGH, 0.0),
    3: Level("terrain 10%", 0.0, 0.10),
    4: Level("low noise + terrain 10%", NOISE_LOW, 0.10),
    5: Level("terrain 20%", 0.0, 0.20),
    6: Level("low noise + terrain 20%", NOISE_LOW, 0.20),
    7: Level("high noise + terrain 40%", NOISE_HIGH, 0.40),
}

PATCHES_PER_UNIT_TERRAIN = 20
PATCH_WINDOW = (3.0, 37.0)
PATCH_DURATION = (2, 4)
PATCH_JERK = (0.8, 1.6)
PATCH_SLIP = 0.3


def _terrain_injectors(fraction: float, seed: int) -> list[Injector]:
    n = round(fraction * PATCHES_PER_UNIT_TERRAIN)
    if n == 0:
        return []
    # same terrain fraction and seed give the same patches whatever the noise level
    rng = np.random.default_rng([seed, round(fraction * 1000)])
    lo, hi = PATCH_WINDOW
    seg = (hi - lo) / n
    out = []
    for i in range(n):
        dur = int(rng.integers(PATCH_DURATION[0], PATCH_DURATION[1] + 1))
        dur = min(dur, max(1, int(seg)))
        slack = max(0, int(seg) - dur)
        start = float(math.floor(lo + i * seg) + int(rng.integers(0, slack + 1)))
        amp = float(rng.uniform(*PATCH_JERK))
        out.append(Injector(InjectorKind.STUCK_EPISODE, start, float(dur)))
        out.append(Injector(InjectorKind.SLIP_EPISODE, start, float(dur), PATCH_SLIP))
        out.append(Injector(InjectorKind.JERK_PULSE, start, 1.0, amp))
    return out


def build_level(level: int, seed: int = 0, params: RobotParams = RobotParams()) -> ScenarioConfig:
    """Deterministic scenario for one degradation level; level 0 has no injectors."""
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}")
    lvl_def = LEVELS[level]
    injectors = []
    if lvl_def.noise_scale > 0.0:
        injectors.append(Injector(InjectorKind.NOISE_BURST, NOISE_START, NOISE_DURATION,
                                  lvl_def.noise_scale))
    injectors.extend(_terrain_injectors(lvl_def.terrain, seed))
    return ScenarioConfig(
        start=Pose2D(0.0, 0.0, 0.0),
        goal=Pose2D(20.0, 0.0, 0.0),
        params=params,
        seed=seed,
        max_duration=300.0,
        injectors=tuple(injectors),
    )


# -- scenario files ------------------------------------------------------------

_POSE_KEYS = ("x", "y", "heading")
_INJ_KEYS = ("kind", "t_start", "duration", "intensity")
_PARAM_NAMES = tuple(f.name for f in fields(RobotParams))


def _float(key: str, text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ScenarioError(key, f"not a number: {text!r}") from None
    if not math.isfinite(v):
        raise ScenarioError(key, "must be finite")
    return v


def parse_scenario(text: str) -> ScenarioConfig:
    """Parse the flat ``key = value`` scenario format (``#`` starts a comment)."""
    values: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"line {line_no}", "expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ScenarioError(key, "duplicate key")
        values[key] = value

    poses = {"start": {"x": 0.0, "y": 0.0, "heading": 0.0},
             "goal": {"x": 20.0, "y": 0.0, "heading": 0.0}}
    params: dict[str, float] = {}
    injectors: dict[int, dict[str, str]] = {}
    seed, max_duration = 0, 300.0
    for key, value in values.items():
        parts = key.split(".")
        if key == "seed":
            try:
                seed = int(value)
            except ValueError:
                raise ScenarioError(key, f"not an integer: {value!r}") from None
        elif key == "max_duration":
            max_duration = _float(key, value)
        elif len(parts) == 2 and parts[0] in poses and parts[1] in _POSE_KEYS:
            poses[parts[0]][parts[1]] = _float(key, value)
        elif len(parts) == 2 and parts[0] == "params" and parts[1] in _PARAM_NAMES:
            params[parts[1]] = _float(key, value)
        elif len(parts) == 3 and parts[0] == "injector" and parts[2] in _INJ_KEYS:
            try:
                idx = int(parts[1])
            except ValueError:
                raise ScenarioError(key, "injector index must be an integer") from None
            injectors.setdefault(idx, {})[parts[2]] = value
        else:
            raise ScenarioError(key, "unknown key")

    try:
        robot = RobotParams(**params)
    except ValueError as exc:
        raise ScenarioError("params", str(exc)) from None
    inj_list = []
    for idx in sorted(injectors):
        group = injectors[idx]
        prefix = f"injector.{idx}"
        for k in ("kind", "t_start", "duration"):
            if k not in group:
                raise ScenarioError(f"{prefix}.{k}", "missing")
        try:
            kind = InjectorKind(group["kind"])
        except ValueError:
            raise ScenarioError(f"{prefix}.kind", f"unknown kind {group['kind']!r}") from None
        nums = {k: _float(f"{prefix}.{k}", group[k])
                for k in ("t_start", "duration", "intensity") if k in group}
        if nums["duration"] <= 0.0:
            raise ScenarioError(f"{prefix}.duration", "must be positive")
        if nums.get("intensity", 0.0) < 0.0:
            raise ScenarioError(f"{prefix}.intensity", "must be >= 0")
        inj_list.append(Injector(kind, **nums))
    try:
        return ScenarioConfig(Pose2D(**poses["start"]), Pose2D(**poses["goal"]), robot, seed,
                              max_duration, tuple(inj_list))
    except ValueError as exc:
        raise ScenarioError("start", str(exc)) from None


def format_scenario(sc: ScenarioConfig) -> str:
    lines = [f"seed = {sc.seed}", f"max_duration = {sc.max_duration!r}"]
    for name, pose in (("start", sc.start), ("goal", sc.goal)):
        lines += [f"{name}.{k} = {getattr(pose, k)!r}" for k in _POSE_KEYS]
    lines += [f"params.{k} = {getattr(sc.params, k)!r}" for k in _PARAM_NAMES]
    for i, inj in enumerate(sc.injectors):
        lines += [f"injector.{i}.kind = {inj.kind.value}",
                  f"injector.{i}.t_start = {inj.t_start!r}",
                  f"injector.{i}.duration = {inj.duration!r}",
                  f"injector.{i}.intensity = {inj.intensity!r}"]
    return "\n".join(lines) + "\n"


def load_scenario(path: str | Path) -> ScenarioConfig:
    return parse_scenario(Path(path).read_text())


def with_seed(sc: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(sc, seed=seed)
