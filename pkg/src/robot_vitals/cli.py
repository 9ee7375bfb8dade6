"""Command-line entry point: ``robot-vitals {simulate,replay,monitor,experiment}``.

Exit codes: 0 success, 1 internal failure, 2 input error, 3 insufficient data.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from pathlib import Path
from typing import IO, Sequence

from . import analysis, sim
from .health import (AlertDetector, HealthConfig, HealthEngine, detect_alerts,
                     instantaneous_health_series, total_suffering)
from .telemetry import (InsufficientDurationError, LogParseError, Resampler, RobotParams,
                        TelemetryError, TelemetryLog, dump_log, frame_from_record,
                        params_from_header, parse_log, resample_1hz)
from .vitals import VitalConfig, VitalsEngine, compute_vitals

EXIT_OK, EXIT_INTERNAL, EXIT_INPUT, EXIT_DATA = 0, 1, 2, 3


class UsageError(Exception):
    pass


# -- overrides ----------------------------------------------------------------

_SECTIONS = {"vitals": VitalConfig, "health": HealthConfig, "robot": RobotParams}


def parse_overrides(items: Sequence[str]) -> dict[str, dict[str, float | int]]:
    """Turn ``section.field=value`` strings into per-section keyword dicts."""
    out: dict[str, dict[str, float | int]] = {k: {} for k in _SECTIONS}
    for item in items:
        if "=" not in item:
            raise UsageError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        section, _, name = key.strip().partition(".")
        cls = _SECTIONS.get(section)
        known = {f.name: f for f in dataclasses.fields(cls)} if cls else {}
        if name not in known:
            raise UsageError(f"unknown config key {key!r}")
        as_int = known[name].type in (int, "int")
        try:
            out[section][name] = int(value) if as_int else float(value)
        except ValueError:
            raise UsageError(f"bad value for {key!r}: {value!r}") from None
    return out


def _configs(overrides: dict, threshold: float | None = None):
    try:
        vcfg = VitalConfig(**overrides["vitals"])
        hkw = dict(overrides["health"])
        if threshold is not None:
            hkw["alert_threshold"] = threshold
        hcfg = HealthConfig(**hkw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return vcfg, hcfg


def _robot(base: RobotParams, overrides: dict) -> RobotParams:
    try:
        return dataclasses.replace(base, **overrides["robot"])
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- writers ----------------------------------------------------------------------

def _writer(fh: IO[str]):
    return csv.writer(fh, lineterminator="\n")


def write_vitals(per_tick, fh: IO[str]) -> None:
    w = _writer(fh)
    w.writerow(["t", "vital_id", "raw", "p_suffering", "available"])
    for readings in per_tick:
        for r in readings:
            w.writerow([f"{r.t:g}", r.id.value, repr(r.raw), repr(r.p_suffering),
                        str(r.available).lower()])


def write_health(series, fh: IO[str]) -> None:
    w = _writer(fh)
    w.writerow(["t", "p_total", "health", "n_vitals"])
    for s in series:
        w.writerow([f"{s.t:g}", repr(s.p_total), repr(s.health), s.n_vitals])


def write_alerts(events, fh: IO[str]) -> None:
    w = _writer(fh)
    w.writerow(["t_start", "t_end", "min_health"])
    for e in events:
        w.writerow([f"{e.t_start:g}", f"{e.t_end:g}", repr(e.min_health)])


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands ------------------------------------------------------------------

def cmd_simulate(args) -> int:
    overrides = parse_overrides(args.set)
    vcfg, hcfg = _configs(overrides)
    if args.scenario is not None:
        path = Path(args.scenario)
        if not path.is_file():
            raise UsageError(f"scenario file not found: {path}")
        scenario = sim.load_scenario(path)
    elif args.level is not None:
        scenario = sim.build_level(args.level, args.seed if args.seed is not None else 0)
    else:
        raise UsageError("simulate needs --scenario or --level")
    if args.seed is not None:
        scenario = sim.with_seed(scenario, args.seed)
    scenario = dataclasses.replace(scenario, params=_robot(scenario.params, overrides))

    result = sim.run_trial(scenario, vcfg, hcfg)
    out = _out_dir(args.out)
    with open(out / "telemetry.jsonl", "w") as fh:
        dump_log(result.log, fh)
    with open(out / "trial.csv", "w") as fh:
        w = _writer(fh)
        w.writerow(["completed", "T_comp", "avg_health", "goal_resets", "alerts"])
        w.writerow([str(result.completed).lower(), f"{result.T_comp:g}", repr(result.avg_health),
                    result.goal_resets, len(result.alerts)])
    with open(out / "health.csv", "w") as fh:
        write_health(result.health_series, fh)
    with open(out / "alerts.csv", "w") as fh:
        write_alerts(result.alerts, fh)
    print(f"completed={str(result.completed).lower()} T_comp={result.T_comp:g} "
          f"avg_health={result.avg_health:.4f} alerts={len(result.alerts)}")
    return EXIT_OK


def _read_input(path: str | None) -> str:
    if path is None or path == "-":
        return sys.stdin.read()
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"log file not found: {p}")
    return p.read_text()


def cmd_replay(args) -> int:
    overrides = parse_overrides(args.set)
    vcfg, hcfg = _configs(overrides, args.threshold)
    log = parse_log(_read_input(args.log))
    log = TelemetryLog(log.frames, _robot(log.params, overrides))
    log = resample_1hz(log)
    per_tick = compute_vitals(log, vcfg)
    p_totals = [total_suffering(r, hcfg) for r in per_tick]
    series = instantaneous_health_series(
        p_totals, hcfg, times=[f.t for f in log.frames],
        n_vitals=[sum(r.available for r in rs) for rs in per_tick])
    alerts = detect_alerts(series, hcfg)
    out = _out_dir(args.out)
    with open(out / "vitals.csv", "w") as fh:
        write_vitals(per_tick, fh)
    with open(out / "health.csv", "w") as fh:
        write_health(series, fh)
    with open(out / "alerts.csv", "w") as fh:
        write_alerts(alerts, fh)
    print(f"ticks={len(series)} alerts={len(alerts)}")
    return EXIT_OK


def monitor_stream(lines, out: IO[str], err: IO[str], vcfg: VitalConfig = VitalConfig(),
                   hcfg: HealthConfig = HealthConfig(), params: RobotParams | None = None) -> int:
    """Streaming loop behind ``monitor``; returns the number of skipped lines."""
    params = params or RobotParams()
    resampler = Resampler()
    vitals: VitalsEngine | None = None
    health = HealthEngine(hcfg)
    detector = AlertDetector(hcfg)
    skipped = 0
    seen_frame = False
    for line_no, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            rec = json.loads(raw)
            if isinstance(rec, dict) and "header" in rec and not seen_frame:
                params = params_from_header(rec["header"], line_no)
                continue
            frame = frame_from_record(rec, line_no, params)
            ticks = resampler.push(frame)
        except (json.JSONDecodeError, TelemetryError) as exc:
            skipped += 1
            msg = exc if isinstance(exc, LogParseError) else f"line {line_no}: {exc}"
            err.write(f"warning: {msg}; frame skipped\n")
            err.flush()
            continue
        seen_frame = True
        if vitals is None:
            vitals = VitalsEngine(params, vcfg)
        for tick in ticks:
            sample = health.push(tick.t, vitals.push(tick))
            out.write(f"health t={sample.t:g} p_total={sample.p_total:.6f} "
                      f"health={sample.health:.6f} n_vitals={sample.n_vitals}\n")
            event = detector.push(sample)
            if event is not None and event[0] == "start":
                ev = event[1]
                out.write(f"ALERT t_start={ev.t_start:g} t={sample.t:g} "
                          f"min_health={ev.min_health:.6f}\n")
        out.flush()
    detector.finish()
    return skipped


def cmd_monitor(args) -> int:
    overrides = parse_overrides(args.set)
    vcfg, hcfg = _configs(overrides, args.threshold)
    params = _robot(RobotParams(), overrides)
    if args.log is not None and args.log != "-":
        p = Path(args.log)
        if not p.is_file():
            raise UsageError(f"log file not found: {p}")
        with open(p) as fh:
            monitor_stream(fh, sys.stdout, sys.stderr, vcfg, hcfg, params)
    else:
        monitor_stream(sys.stdin, sys.stdout, sys.stderr, vcfg, hcfg, params)
    return EXIT_OK


def parse_levels(text: str) -> list[int]:
    levels: list[int] = []
    for part in text.split(","):
        part = part.strip()
        try:
            if "-" in part:
                lo, hi = part.split("-", 1)
                levels.extend(range(int(lo), int(hi) + 1))
            elif part:
                levels.append(int(part))
        except ValueError:
            raise UsageError(f"bad --levels value {text!r}") from None
    for lvl in levels:
        if lvl not in sim.LEVELS:
            raise UsageError(f"unknown level {lvl}")
    if not levels:
        raise UsageError("no levels given")
    return levels


def cmd_experiment(args) -> int:
    overrides = parse_overrides(args.set)
    vcfg, hcfg = _configs(overrides)
    levels = parse_levels(args.levels)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    seed = args.seed if args.seed is not None else 0
    summaries = analysis.run_matrix(levels, args.trials, seed, vcfg, hcfg, workers=args.workers)
    out = _out_dir(args.out)
    with open(out / "summary.csv", "w") as fh:
        analysis.write_summaries(summaries, fh)
    code = EXIT_OK
    try:
        result = analysis.correlate_health_tcomp(summaries, seed=seed)
        report = analysis.format_report(summaries, result)
    except analysis.InsufficientDataError as exc:
        report = analysis.format_report(summaries, None, str(exc))
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_DATA
    (out / "correlation.txt").write_text(report)
    sys.stdout.write(report)
    return code


# -- entry --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="robot-vitals", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, threshold=False):
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config constant, e.g. vitals.noise_b=1.2 (repeatable)")
        if threshold:
            p.add_argument("--threshold", type=float, default=None,
                           help="alert threshold on health (default -1.4)")

    p = sub.add_parser("simulate", help="run one simulated trial")
    p.add_argument("--scenario", help="scenario key=value file")
    p.add_argument("--level", type=int, help="use a built-in degradation level instead")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("replay", help="compute vitals, health and alerts for a log")
    p.add_argument("--log", required=True, help="JSONL log file, or - for stdin")
    p.add_argument("--out", required=True)
    common(p, threshold=True)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("monitor", help="stream health lines for frames on stdin")
    p.add_argument("--log", help="read frames from a file instead of stdin")
    common(p, threshold=True)
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("experiment", help="run the degradation-level matrix")
    p.add_argument("--levels", default="0-7", help="e.g. 0-7 or 0,3,7")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=1)
    common(p)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, sim.ScenarioError, LogParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InsufficientDurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TelemetryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BrokenPipeError:
        # downstream reader went away (e.g. piped into head)
        sys.stdout = open(os.devnull, "w")
        return EXIT_OK
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
