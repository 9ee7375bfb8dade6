"""Experiment matrix runner and rank-correlation statistics."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np
from scipy.stats import rankdata

from . import _kernels
from .health import HealthConfig
from .sim import LEVELS, build_level, run_trial
from .vitals import VitalConfig

N_PERMUTATIONS = 10_000


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class TrialSummary:
    level: int
    seed: int
    completed: bool
    T_comp: float
    avg_health: float


@dataclass(frozen=True)
class CorrelationResult:
    rho: float
    p_value: float
    n: int


def spearman(xs: Sequence[float], ys: Sequence[float], n_permutations: int = N_PERMUTATIONS,
             seed: int = 0) -> CorrelationResult:
    """Spearman's rho with a two-sided Monte-Carlo permutation p-value.

    Ties get average ranks. The p-value is ``(count + 1) / (N + 1)`` where
    ``count`` is the number of permutations whose |rho| reaches the observed
    |rho|.
    """
    if len(xs) != len(ys):
        raise ValueError("length mismatch")
    n = len(xs)
    if n < 3:
        raise ValueError("need at least 3 pairs")
    rx = rankdata(np.asarray(xs, dtype=np.float64))
    ry = rankdata(np.asarray(ys, dtype=np.float64))
    cx = rx - rx.mean()
    cy = ry - ry.mean()
    sxx, syy = float(cx @ cx), float(cy @ cy)
    if sxx == 0.0 or syy == 0.0:
        raise InsufficientDataError("zero rank variance")
    cov = float(cx @ cy)
    rho = max(-1.0, min(1.0, cov / math.sqrt(sxx * syy)))

    rng = np.random.default_rng(seed)
    perms = np.argsort(rng.random((n_permutations, n)), axis=1)
    # relative slack so permutations tied with the observed statistic are counted
    threshold = abs(cov) * (1.0 - 1e-12)
    count = _kernels.permutation_abs_count(cx, cy, perms, threshold)
    return CorrelationResult(rho, (count + 1) / (n_permutations + 1), n)


def _run_one(job: tuple[int, int, VitalConfig, HealthConfig]) -> TrialSummary:
    level, seed, vcfg, hcfg = job
    r = run_trial(build_level(level, seed), vcfg, hcfg)
    return TrialSummary(level, seed, r.completed, r.T_comp, r.avg_health)


def run_matrix(levels: Sequence[int], trials_per_level: int, base_seed: int = 0,
               vital_cfg: VitalConfig = VitalConfig(), health_cfg: HealthConfig = HealthConfig(),
               workers: int = 1) -> list[TrialSummary]:
    """Run ``trials_per_level`` seeded trials per level, in (level, seed) order."""
    if trials_per_level < 1:
        raise ValueError("trials_per_level must be >= 1")
    for lvl in levels:
        if lvl not in LEVELS:
            raise ValueError(f"unknown level {lvl!r}")
    jobs = [(lvl, base_seed + i, vital_cfg, health_cfg)
            for lvl in levels for i in range(trials_per_level)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]


def correlate_health_tcomp(summaries: Sequence[TrialSummary], seed: int = 0) -> CorrelationResult:
    done = [s for s in summaries if s.completed]
    if len(done) < 3:
        raise InsufficientDataError("insufficient data")
    return spearman([s.avg_health for s in done], [s.T_comp for s in done], seed=seed)


def write_summaries(summaries: Sequence[TrialSummary], out: IO[str]) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["level", "seed", "completed", "T_comp", "avg_health"])
    for s in summaries:
        w.writerow([s.level, s.seed, str(s.completed).lower(), f"{s.T_comp:g}", repr(s.avg_health)])


def format_report(summaries: Sequence[TrialSummary], result: CorrelationResult | None,
                  error: str | None = None) -> str:
    lines = ["robot health vs completion time", ""]
    if result is not None:
        lines += [f"rho      = {result.rho:.6f}",
                  f"p_value  = {result.p_value:.6f}",
                  f"n        = {result.n}"]
    else:
        lines.append(f"correlation: {error}")
    lines += ["", "level  trials  completed  failed  median_T_comp  median_avg_health"]
    for lvl in sorted({s.level for s in summaries}):
        group = [s for s in summaries if s.level == lvl]
        ok = sum(s.completed for s in group)
        lines.append(f"{lvl:>5}  {len(group):>6}  {ok:>9}  {len(group) - ok:>6}  "
                     f"{float(np.median([s.T_comp for s in group])):>13.1f}  "
                     f"{float(np.median([s.avg_health for s in group])):>17.4f}")
    return "\n".join(lines) + "\n"
