"""Command line behaviour: output shape and the exit-code contract.

Happy paths go through a real subprocess; error paths run in-process where
monkeypatching is possible.
"""

import subprocess
import sys
import textwrap

import pytest

from uavcsma import SWEEP_CSV_HEADER, CheckResult
from uavcsma import cli

TINY_CONFIG = textwrap.dedent("""\
    [sim]
    warmup_s = 2
    max_time_s = 20
    n_seeds = 2
    min_events = 100

    [sweep]
    axis = velocity
    values = 10
    min_sim_seconds = 1

    [output]
    csv = out.csv
    """)


def run_cli(*args, cwd):
    return subprocess.run([sys.executable, "-m", "uavcsma", *args],
                          capture_output=True, text=True, cwd=str(cwd), timeout=300)


def test_model_defaults(tmp_path):
    proc = run_cli("model", cwd=tmp_path)
    assert proc.returncode == 0
    assert "N=1" in proc.stdout
    assert "S = 0.55311443" in proc.stdout
    assert "csv:radius_m,velocity_mps," in proc.stdout
    assert "csv:1000,10,50,8,7,basic,1," in proc.stdout


def test_simulate_and_seed_override(tmp_path):
    (tmp_path / "run.ini").write_text(TINY_CONFIG)
    proc = run_cli("simulate", "run.ini", "--seeds", "2", cwd=tmp_path)
    assert proc.returncode == 0
    assert "S_mean = " in proc.stdout
    assert "Student-t over 2 seeds" in proc.stdout
    # one table row per seed
    assert len([ln for ln in proc.stdout.splitlines() if ln.lstrip().startswith(("1 ", "2 "))]) == 2


def test_sweep_then_plot(tmp_path):
    (tmp_path / "run.ini").write_text(TINY_CONFIG)
    proc = run_cli("sweep", "run.ini", cwd=tmp_path)
    assert proc.returncode == 0
    csv_path = tmp_path / "out.csv"
    assert csv_path.exists()
    assert csv_path.read_text().splitlines()[0] == SWEEP_CSV_HEADER
    assert proc.stdout.splitlines()[0] == SWEEP_CSV_HEADER   # echoed
    assert "# wrote out.csv" in proc.stdout
    assert "# points=1" in proc.stdout

    proc = run_cli("plot", "out.csv", "--out-dir", "charts", cwd=tmp_path)
    assert proc.returncode == 0
    svgs = list((tmp_path / "charts").glob("*.svg"))
    assert svgs and all("throughput_vs_velocity" in p.name for p in svgs)
    assert "wrote" in proc.stdout


def test_validate_single_check(tmp_path):
    proc = run_cli("validate", "--only", "1", cwd=tmp_path)
    assert proc.returncode == 0
    assert "check 1" in proc.stdout and "PASS" in proc.stdout
    assert "1/1 checks passed" in proc.stdout


def test_usage_errors(tmp_path):
    assert run_cli("frobnicate", cwd=tmp_path).returncode == 1
    assert run_cli(cwd=tmp_path).returncode == 1
    assert run_cli("model", "missing.ini", cwd=tmp_path).returncode == 1


# ------------------------------------------------------------- in-process

def test_solver_failure_exit_code(tmp_path, capsys):
    path = tmp_path / "cramped.ini"
    path.write_text("[scenario]\nradius_m = 210\nvelocity_mps = 200\n"
                    "cw_min = 256\nretry_limit = 10\n"
                    "[sim]\nflight_length_m = 2100\n")
    assert cli.main(["model", str(path)]) == 2
    assert "traversal" in capsys.readouterr().err


def test_bad_config_exit_code(tmp_path, capsys):
    path = tmp_path / "bad.ini"
    path.write_text("[scenario]\nradius_m = -5\n")
    assert cli.main(["model", str(path)]) == 1
    assert "radius" in capsys.readouterr().err


def test_plot_error_paths(tmp_path, capsys):
    assert cli.main(["plot", str(tmp_path / "missing.csv")]) == 1
    empty = tmp_path / "empty.csv"
    empty.write_text(SWEEP_CSV_HEADER + "\n")
    assert cli.main(["plot", str(empty), "--out-dir", str(tmp_path / "charts")]) == 1
    assert "no data rows" in capsys.readouterr().err
    assert not (tmp_path / "charts").exists()


def test_validate_failure_exit_code(monkeypatch, capsys):
    fake = [CheckResult(5, "grid agreement", False, "max err 0.12", 0.1)]
    monkeypatch.setattr(cli, "run_checks", lambda only=None, echo=None: fake)
    assert cli.main(["validate"]) == 3
    assert "0/1 checks passed" in capsys.readouterr().out


def test_validate_only_parsing(capsys):
    assert cli.main(["validate", "--only", "abc"]) == 1
    assert cli.main(["validate", "--only", "99"]) == 1
