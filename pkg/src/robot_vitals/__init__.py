"""Robot vitals and robot health.

Five runtime indicators ("vitals") are computed from 1 Hz mobile-robot
telemetry, each mapped to a probability that the robot is suffering. Their
mean is turned into an entropy-based health score; sustained low health
raises alerts. A small kinematic simulator regenerates degradation-level
trials for validating the score against task completion time.
"""

from ._kernels import BACKEND
from .health import (AlertEvent, HealthConfig, HealthSample, average_health, detect_alerts,
                     entropy_term, health_over_window, instantaneous_health_series,
                     total_suffering)
from .telemetry import (LaserScan, Pose2D, RobotParams, TelemetryFrame, TelemetryLog,
                        finite_difference, parse_log, resample_1hz, rolling_mean)
from .vitals import VitalConfig, VitalId, VitalReading, compute_vitals

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AlertEvent", "HealthConfig", "HealthSample", "average_health", "detect_alerts",
    "entropy_term", "health_over_window", "instantaneous_health_series", "total_suffering",
    "LaserScan", "Pose2D", "RobotParams", "TelemetryFrame", "TelemetryLog",
    "finite_difference", "parse_log", "resample_1hz", "rolling_mean",
    "VitalConfig", "VitalId", "VitalReading", "compute_vitals",
]
