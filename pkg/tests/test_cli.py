import csv
import io
import json

import pytest

from robot_vitals import cli
from robot_vitals.health import detect_alerts
from robot_vitals.sim import Injector, InjectorKind, ScenarioConfig, build_level, format_scenario, run_trial
from robot_vitals.telemetry import dump_log


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.fixture
def clean_log(tmp_path):
    path = tmp_path / "clean.jsonl"
    with open(path, "w") as fh:
        dump_log(run_trial(build_level(0, 1)).log, fh)
    return path


@pytest.fixture
def stuck_result():
    sc = ScenarioConfig(seed=2, injectors=(Injector(InjectorKind.STUCK_EPISODE, 10, 12),))
    return run_trial(sc)


class TestSimulate:
    def test_level_zero_scenario(self, tmp_path):
        scen = tmp_path / "l0.txt"
        scen.write_text(format_scenario(build_level(0)))
        assert cli.main(["simulate", "--scenario", str(scen), "--seed", "3", "--out", str(tmp_path / "o")]) == 0
        trial = read_csv(tmp_path / "o" / "trial.csv")
        assert trial[0]["completed"] == "true"
        assert (tmp_path / "o" / "telemetry.jsonl").stat().st_size > 0

    def test_missing_file(self, tmp_path):
        assert cli.main(["simulate", "--scenario", str(tmp_path / "nope"), "--out", str(tmp_path)]) == 2

    def test_bad_key(self, tmp_path, capsys):
        scen = tmp_path / "bad.txt"
        scen.write_text("seed = 1\ninjector.0.kind = Lava\ninjector.0.t_start = 1\ninjector.0.duration = 2\n")
        assert cli.main(["simulate", "--scenario", str(scen), "--out", str(tmp_path / "o")]) == 2
        assert "injector.0.kind" in capsys.readouterr().err

    def test_byte_identical(self, tmp_path):
        for d in ("a", "b"):
            assert cli.main(["simulate", "--level", "7", "--seed", "5", "--out", str(tmp_path / d)]) == 0
        for name in ("telemetry.jsonl", "trial.csv", "health.csv", "alerts.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_unknown_override(self, tmp_path):
        assert cli.main(["simulate", "--level", "0", "--out", str(tmp_path), "--set", "vitals.nope=1"]) == 2


class TestReplay:
    def test_clean_no_alerts(self, clean_log, tmp_path):
        assert cli.main(["replay", "--log", str(clean_log), "--out", str(tmp_path / "r")]) == 0
        assert read_csv(tmp_path / "r" / "alerts.csv") == []
        vitals = read_csv(tmp_path / "r" / "vitals.csv")
        assert len(vitals) == 5 * len(read_csv(tmp_path / "r" / "health.csv"))

    def test_matches_online_health(self, tmp_path, stuck_result):
        log = tmp_path / "stuck.jsonl"
        with open(log, "w") as fh:
            dump_log(stuck_result.log, fh)
        assert cli.main(["replay", "--log", str(log), "--out", str(tmp_path / "r")]) == 0
        rows = read_csv(tmp_path / "r" / "health.csv")
        assert [float(r["health"]) for r in rows] == [s.health for s in stuck_result.health_series]
        assert len(read_csv(tmp_path / "r" / "alerts.csv")) == len(stuck_result.alerts) == 1

    def test_without_accel(self, clean_log, tmp_path):
        lines = clean_log.read_text().splitlines()
        out = [lines[0]]
        for line in lines[1:]:
            rec = json.loads(line)
            rec["az"] = None
            out.append(json.dumps(rec))
        noimu = tmp_path / "noimu.jsonl"
        noimu.write_text("\n".join(out) + "\n")
        assert cli.main(["replay", "--log", str(noimu), "--out", str(tmp_path / "r")]) == 0
        per_tick = {}
        for row in read_csv(tmp_path / "r" / "vitals.csv"):
            per_tick.setdefault(float(row["t"]), []).append(row["available"] == "true")
        assert all(sum(v) == 4 for t, v in per_tick.items() if t >= 5)
        assert all(sum(v) <= 4 for v in per_tick.values())

    def test_deterministic(self, clean_log, tmp_path):
        for d in ("a", "b"):
            cli.main(["replay", "--log", str(clean_log), "--out", str(tmp_path / d)])
        for name in ("vitals.csv", "health.csv", "alerts.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_parse_error(self, tmp_path):
        bad = tmp_path / "bad.jsonl"
        bad.write_text("{oops\n")
        assert cli.main(["replay", "--log", str(bad), "--out", str(tmp_path / "r")]) == 2

    def test_insufficient_duration(self, clean_log, tmp_path):
        short = tmp_path / "short.jsonl"
        short.write_text("\n".join(clean_log.read_text().splitlines()[:2]) + "\n")
        assert cli.main(["replay", "--log", str(short), "--out", str(tmp_path / "r")]) == 3

    def test_threshold_override(self, tmp_path, stuck_result):
        log = tmp_path / "stuck.jsonl"
        with open(log, "w") as fh:
            dump_log(stuck_result.log, fh)
        cli.main(["replay", "--log", str(log), "--out", str(tmp_path / "r"), "--threshold", "-5"])
        assert read_csv(tmp_path / "r" / "alerts.csv") == []


class TestMonitor:
    def run(self, lines):
        out, err = io.StringIO(), io.StringIO()
        cli.monitor_stream(lines, out, err)
        return out.getvalue().splitlines(), err.getvalue().splitlines()

    def test_clean(self, clean_log):
        out, err = self.run(clean_log.read_text().splitlines())
        assert out and all(line.startswith("health ") for line in out)
        assert err == []

    def test_one_alert_for_dip(self, stuck_result):
        buf = io.StringIO()
        dump_log(stuck_result.log, buf)
        out, _ = self.run(buf.getvalue().splitlines())
        alerts = [line for line in out if line.startswith("ALERT")]
        assert len(alerts) == 1 == len(detect_alerts(stuck_result.health_series))
        ev = stuck_result.alerts[0]
        assert f"t_start={ev.t_start:g}" in alerts[0]
        # alert emitted on the tick the debounce is met
        assert f" t={ev.t_start + 2:g} " in alerts[0]

    def test_malformed_middle_line(self, clean_log):
        lines = clean_log.read_text().splitlines()
        lines.insert(len(lines) // 2, "{garbage")
        out, err = self.run(lines)
        clean_out, _ = self.run(clean_log.read_text().splitlines())
        assert len(err) == 1 and err[0].startswith("warning")
        assert out == clean_out

    def test_main_reads_stdin(self, clean_log, monkeypatch, capsys):
        monkeypatch.setattr("sys.stdin", io.StringIO(clean_log.read_text()))
        assert cli.main(["monitor"]) == 0
        assert capsys.readouterr().out.count("health ") == len(clean_log.read_text().splitlines()) - 1

    def test_subsecond_stream(self):
        # 4 Hz stationary frames still produce one line per second
        lines = [json.dumps({"t": i / 4, "fx": 0, "fy": 0, "fh": 0, "ox": 0, "oy": 0, "oh": 0,
                             "az": 0, "goal_x": 5, "goal_y": 0, "ranges": [5.0] * 16})
                 for i in range(21)]
        out, _ = self.run(lines)
        assert [line.split()[1] for line in out] == [f"t={k}" for k in range(6)]


class TestExperiment:
    def test_insufficient(self, tmp_path, capsys):
        code = cli.main(["experiment", "--levels", "0", "--trials", "2", "--out", str(tmp_path)])
        assert code == 3
        assert len(read_csv(tmp_path / "summary.csv")) == 2
        assert "insufficient data" in capsys.readouterr().err

    def test_small_matrix_deterministic(self, tmp_path):
        args = ["experiment", "--levels", "0,3,7", "--trials", "3", "--seed", "4"]
        assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
        assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
        for name in ("summary.csv", "correlation.txt"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        assert "rho" in (tmp_path / "a" / "correlation.txt").read_text()

    def test_bad_levels(self, tmp_path):
        assert cli.main(["experiment", "--levels", "0-99", "--out", str(tmp_path)]) == 2


def test_parse_overrides():
    ov = cli.parse_overrides(["vitals.goal_window=7", "health.alert_threshold=-1.2", "robot.v_max=2"])
    assert ov["vitals"] == {"goal_window": 7}
    assert ov["health"] == {"alert_threshold": -1.2}
    assert ov["robot"] == {"v_max": 2.0}
    with pytest.raises(cli.UsageError):
        cli.parse_overrides(["vitals.goal_window"])
    with pytest.raises(cli.UsageError):
        cli.parse_overrides(["sim.seed=3"])
