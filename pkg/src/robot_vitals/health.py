"""Total suffering, entropy-based robot health and threshold alerts.

Health over a window of ticks is ``sum(p * ln p)`` of the per-tick total
suffering ``p``. The summand is already non-positive, so health lives in
``[-len/e, 0]`` and is 0 only when every ``p`` is exactly 0 or 1.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .vitals import VitalReading


@dataclass(frozen=True)
class HealthConfig:
    window_len: int = 5
    alert_threshold: float = -1.4
    alert_min_duration: int = 3

    def __post_init__(self) -> None:
        if self.window_len < 1 or int(self.window_len) != self.window_len:
            raise ValueError("window_len must be an integer >= 1")
        if not self.alert_threshold < 0.0:
            raise ValueError("alert_threshold must be negative")
        if self.alert_min_duration < 1:
            raise ValueError("alert_min_duration must be >= 1")


@dataclass(frozen=True, slots=True)
class HealthSample:
    t: float
    p_total: float
    health: float
    n_vitals: int


@dataclass(frozen=True, slots=True)
class AlertEvent:
    t_start: float
    t_end: float
    min_health: float


def total_suffering(readings: Iterable[VitalReading], cfg: HealthConfig = HealthConfig()) -> float:
    """Equal-weight mean of the available vitals' suffering (eta = 1/n)."""
    ps = [r.p_suffering for r in readings if r.available]
    if not ps:
        raise ValueError("no vitals")
    return min(1.0, max(0.0, math.fsum(ps) / len(ps)))


def entropy_term(p: float) -> float:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    return p * math.log(p) if p > 0.0 else 0.0


def health_over_window(p_totals: Sequence[float]) -> float:
    if len(p_totals) == 0:
        raise ValueError("empty window")
    return math.fsum(entropy_term(p) for p in p_totals)


def instantaneous_health_series(p_totals: Sequence[float], cfg: HealthConfig = HealthConfig(),
                                times: Sequence[float] | None = None,
                                n_vitals: Sequence[int] | None = None) -> list[HealthSample]:
    """Trailing-window health at every tick (warm-up windows are shorter)."""
    p = np.asarray(p_totals, dtype=np.float64)
    if p.size and (p.min() < 0.0 or p.max() > 1.0):
        raise ValueError("probability out of range")
    h = _kernels.windowed_entropy(p, int(cfg.window_len))
    times = range(p.size) if times is None else times
    n_vitals = [0] * p.size if n_vitals is None else n_vitals
    return [HealthSample(float(t), float(pt), float(ht), int(n))
            for t, pt, ht, n in zip(times, p, h, n_vitals)]


def average_health(trial: Sequence[HealthSample]) -> float:
    if not trial:
        raise ValueError("empty trial")
    return math.fsum(s.health for s in trial) / len(trial)


class HealthEngine:
    """Streaming counterpart of :func:`instantaneous_health_series`."""

    def __init__(self, cfg: HealthConfig = HealthConfig()):
        self.cfg = cfg
        self._terms: deque[float] = deque(maxlen=int(cfg.window_len))

    def push(self, t: float, readings: Sequence[VitalReading]) -> HealthSample:
        p = total_suffering(readings, self.cfg)
        self._terms.append(entropy_term(p))
        health = 0.0
        for v in self._terms:
            health += v
        return HealthSample(t, p, health, sum(1 for r in readings if r.available))


class AlertDetector:
    """Debounced threshold detector over a health stream.

    ``push`` returns ``"start"`` on the tick the debounce is first satisfied,
    ``"end"`` with the finished event when a qualifying run ends, else None.
    """

    def __init__(self, cfg: HealthConfig = HealthConfig()):
        self.cfg = cfg
        self._run: list[HealthSample] = []
        self.events: list[AlertEvent] = []

    def push(self, sample: HealthSample) -> tuple[str, AlertEvent] | None:
        if sample.health < self.cfg.alert_threshold:
            self._run.append(sample)
            if len(self._run) == self.cfg.alert_min_duration:
                return "start", self._event()
            return None
        return self._close()

    def finish(self) -> tuple[str, AlertEvent] | None:
        return self._close()

    def _event(self) -> AlertEvent:
        return AlertEvent(self._run[0].t, self._run[-1].t, min(s.health for s in self._run))

    def _close(self) -> tuple[str, AlertEvent] | None:
        result = None
        if len(self._run) >= self.cfg.alert_min_duration:
            ev = self._event()
            self.events.append(ev)
            result = ("end", ev)
        self._run = []
        return result


def detect_alerts(series: Sequence[HealthSample], cfg: HealthConfig = HealthConfig()) -> list[AlertEvent]:
    det = AlertDetector(cfg)
    for s in series:
        det.push(s)
    det.finish()
    return det.events
