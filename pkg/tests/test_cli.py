import csv
import io
import json
import os
import subprocess
import sys

import pytest

from fusedfocus import cli
from fusedfocus.cli import main

FAST_SCAN = ["--set", "scan.eps_grid=[-0.03, 0.0, 0.03]", "--set", "scan.budget.t_final=40",
             "--set", "scan.budget.seeds=1", "--set", "scan.budget.max_events=200"]
FAST_BLOWUP = ["--set", "blowup.a=0.001", "--set", "blowup.eps_range=[-0.02, 0.0]", "--set", "blowup.n=41"]


def run(capsys, *argv):
    rc = main(list(argv))
    out, err = capsys.readouterr()
    return rc, out, err


def files(path):
    return {name: (path / name).read_bytes() for name in sorted(os.listdir(path))}


class TestSimulate:
    def test_writes_outputs(self, capsys, tmp_path):
        rc, out, _ = run(capsys, "simulate", "--out", str(tmp_path), "--set", "params.epsilon=-0.04",
                         "--set", "integration.t_span=[0, 20]")
        assert rc == 0 and out == ""
        assert set(os.listdir(tmp_path)) == {"trajectory.csv", "trajectory.json", "trajectory.svg"}
        rows = list(csv.DictReader(io.StringIO((tmp_path / "trajectory.csv").read_text())))
        assert set(rows[0]) >= {"t", "x", "y", "T", "S", "mode", "event"}
        assert float(rows[-1]["t"]) == pytest.approx(20.0)
        assert any(r["event"] for r in rows)

    def test_stdout_only(self, capsys, tmp_path):
        rc, out, _ = run(capsys, "simulate", "--stdout", "--out", str(tmp_path / "none"),
                         "--set", "integration.t_span=[0, 5]")
        assert rc == 0 and out.startswith("t,x,y")
        assert not (tmp_path / "none").exists()

    def test_random_x0_seeded(self, capsys):
        args = ["simulate", "--stdout", "--set", "integration.x0=random", "--set", "integration.t_span=[0, 2]"]
        a = run(capsys, *args, "--seed", "3")[1]
        b = run(capsys, *args, "--seed", "3")[1]
        c = run(capsys, *args, "--seed", "4")[1]
        assert a == b and a != c

    def test_ts_chart(self, capsys):
        rc, out, _ = run(capsys, "simulate", "--stdout", "--set", "integration.chart=TS",
                         "--set", "integration.x0=[0.5, 0.6]", "--set", "integration.t_span=[0, 1]")
        first = next(csv.DictReader(io.StringIO(out)))
        assert rc == 0 and float(first["T"]) == 0.5 and float(first["S"]) == pytest.approx(0.6)

    def test_smooth_needs_a(self, capsys):
        rc, _, err = run(capsys, "simulate", "--stdout", "--set", "system=welander-smooth")
        assert rc == 1 and "configuration error" in err


class TestSliding:
    def test_report(self, capsys):
        rc, out, _ = run(capsys, "sliding", "--stdout", "--set", "params.epsilon=0.05")
        rep = json.loads(out)
        assert rc == 0
        assert rep["lo"] == pytest.approx(0.8125) and rep["hi"] == pytest.approx(0.9375)
        assert rep["stability"] == "stable" and rep["dS_dlambda"] == -0.05

    def test_collapsed(self, capsys):
        rep = json.loads(run(capsys, "sliding", "--stdout")[1])
        assert rep["stability"] == "collapsed" and rep["width"] == 0.0


class TestBlowup:
    def test_outputs(self, capsys, tmp_path):
        rc, _, _ = run(capsys, "blowup", "--out", str(tmp_path), *FAST_BLOWUP)
        assert rc == 0
        rec = json.loads((tmp_path / "hopf.json").read_text())
        assert rec["eps_star"] == pytest.approx(-0.0079635, abs=1e-5)
        header = (tmp_path / "blowup.csv").read_text().splitlines()[0]
        assert header == "eps,trace,discriminant,trace_numeric,discriminant_numeric"
        assert (tmp_path / "blowup.svg").read_text().startswith("<svg")

    def test_not_found_is_reported(self, capsys):
        rc, out, _ = run(capsys, "blowup", "--stdout", "--format", "json", "--set", "blowup.n=61")
        rec = json.loads(out)
        assert rc == 0 and rec["eps_star"] is None and "no eigenvalue crossing" in rec["note"]

    def test_zero_a_is_config_error(self, capsys):
        assert run(capsys, "blowup", "--stdout", "--set", "blowup.a=0")[0] == 1


class TestScan:
    def test_csv_on_stdout(self, capsys):
        rc, out, _ = run(capsys, "scan", "--stdout", *FAST_SCAN)
        rows = list(csv.reader(io.StringIO(out)))
        assert rc == 0 and len(rows) == 4 and rows[0][0] == "a"

    def test_json_format(self, capsys):
        rc, out, _ = run(capsys, "scan", "--stdout", "--format", "json", *FAST_SCAN)
        assert rc == 0 and json.loads(out)["points"] == 3

    def test_deterministic_files(self, capsys, tmp_path):
        for d in ("one", "two"):
            assert run(capsys, "scan", "--out", str(tmp_path / d), "--threads", "2", *FAST_SCAN)[0] == 0
        assert files(tmp_path / "one") == files(tmp_path / "two")


class TestVerify:
    def test_passing_criterion(self, capsys, tmp_path):
        rc, out, _ = run(capsys, "verify", "--only", "1", "--out", str(tmp_path))
        assert rc == 0 and out.startswith("[PASS] criterion  1")
        assert (tmp_path / "acceptance.csv").exists()

    def test_failing_criterion_exit_code(self, capsys):
        # no eigenvalue crossing exists at a = 0.01, see the blowup tests
        rc, out, _ = run(capsys, "verify", "--only", "8", "--stdout")
        assert rc == 2 and out.startswith("[FAIL] criterion  8")


class TestErrors:
    def test_unknown_key(self, capsys):
        rc, out, err = run(capsys, "sliding", "--stdout", "--set", "params.gamma=1")
        assert rc == 1 and out == "" and "gamma" in err

    def test_bad_usage(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["nonsense"])
        assert exc.value.code == 1

    def test_missing_config_file(self, capsys, tmp_path):
        assert run(capsys, "sliding", "--config", str(tmp_path / "nope.yaml"))[0] == 3

    def test_unwritable_output(self, capsys, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("")
        assert run(capsys, "sliding", "--out", str(blocker / "sub"))[0] == 3

    def test_entry_point(self, tmp_path):
        res = subprocess.run([sys.executable, "-m", "fusedfocus.cli", "sliding", "--stdout"],
                             capture_output=True, text=True, cwd=tmp_path)
        assert res.returncode == 0 and json.loads(res.stdout)["stability"] == "collapsed"
        assert res.stderr == ""

    def test_exit_code_constants(self):
        assert (cli.EXIT_OK, cli.EXIT_CONFIG, cli.EXIT_NUMERICS, cli.EXIT_IO) == (0, 1, 2, 3)
