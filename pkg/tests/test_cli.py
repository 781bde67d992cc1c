import csv
import json
import math
import os

import numpy as np
import pytest

from qcurv import Constant, FixedOrigin, make_params, solve_normal
from qcurv.cli import main
from qcurv.config import ConfigError, floats, make_profile, parse_config
from qcurv.model import RadialField
from qcurv.scenarios import EXIT_ASSERT, EXIT_CONFIG, EXIT_IO, EXIT_OK, emit_profile, run_scenario

from conftest import setup, singular_bubble

SOLVE = """
[scenario]
name = solve

[params]
n = 2
alpha = 0

[grid]
m = 1024
r_min = 1e-6
r_max = 1e4

[profile]
kind = constant

[normalization]
mode = origin
rho = 0

[assert]
converged = true
lambda_vol_rel = 0.01
verdict = {verdict}
"""

SCAN = """
[scenario]
name = bol-scan

[grid]
m = 512
r_min = 1e-5
r_max = 1e4

[scan]
alphas = -0.5, 0
rhos = -1, 1
profiles = bump, dip

[profile:bump]
kind = one_plus_l1
amplitude = 1

[profile:dip]
kind = one_plus_l1
amplitude = -0.5

[assert]
upper_margin = 0.01
lower_margin = 0.01
"""


def write(tmp_path, text, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_floats_ranges():
    assert floats("-6:6:1") == [float(x) for x in range(-6, 7)]
    assert floats("0.5, 1:2:0.5") == [0.5, 1.0, 1.5, 2.0]
    with pytest.raises(ConfigError):
        floats("1:2")


@pytest.mark.parametrize("text, match", [
    ("[scenario]\nname = solve\n[params]\nn = 2\nbogus = 1\n", "unknown key"),
    ("[scenario]\nname = solve\n[weird]\nx = 1\n", "unknown section"),
    ("[scenario]\nname = solve\n[params]\nn = 2\n", "needs a \\[profile\\]"),
    ("[scenario]\nname = dance\n", "unknown scenario"),
    ("[scenario]\nname = solve\n[params]\nn = two\n", "bad value"),
    ("[scenario]\nname = remark62\n[scan]\nr_max = 10\n[profile]\nc = 1\n", "missing key 'kind'"),
    ("[scenario]\nname = solve\n[params]\nn=2\n[profile]\nkind = blob\n[normalization]\nmode=origin\n",
     "unknown kind"),
    ("[scenario]\nname = solve\n[params]\nn=2\n[profile]\nkind = one_plus_l1\n[normalization]\nmode=origin\n",
     "needs an amplitude"),
    ("not an ini file", None),
])
def test_config_rejected(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_config_scenario_mismatch():
    with pytest.raises(ConfigError, match="command asked for"):
        parse_config(SOLVE.format(verdict="EqualityHolds"), scenario="bol-scan")


def test_make_profile_kinds():
    assert make_profile({"kind": "constant", "c": 2.0}).ge_one
    assert make_profile({"kind": "tabulated", "radii": [0, 1, 1e12], "samples": [1, 2, 2]}).ge_one
    assert make_profile({"kind": "power_sum", "c0": 1, "c1": 1, "p": 2, "amplitude": 3,
                         "shape": "exponential"}).far_power == 2
    with pytest.raises(ConfigError):
        make_profile({"kind": "tabulated", "radii": [1, 0], "samples": [1, 2]})


def test_solve_cli_writes_profile_and_report(tmp_path, capsys):
    cfg = write(tmp_path, SOLVE.format(verdict="EqualityHolds"))
    out = tmp_path / "out"
    assert main(["solve", "--config", cfg, "--out", str(out), "--strict"]) == EXIT_OK
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == 3 and all(line.startswith("[PASS] solve/") for line in lines)
    report = json.loads((out / "solve.json").read_text())
    assert report["passed"]
    assert report["rows"][0]["lambda_vol"] == pytest.approx(4 * math.pi, rel=1e-2)
    with open(out / "profile.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["r", "u", "density", "Q"]
    r = np.array([float(x[0]) for x in rows[1:]])
    assert np.all(np.diff(r) > 0)


def test_failed_assertion_exit_status(tmp_path, capsys):
    cfg = write(tmp_path, SOLVE.format(verdict="Violated"))
    out = str(tmp_path / "out")
    assert main(["solve", "--config", cfg, "--out", out]) == EXIT_OK
    assert main(["solve", "--config", cfg, "--out", out, "--strict"]) == EXIT_ASSERT
    text = capsys.readouterr().out
    assert "[FAIL] solve/verdict" in text and "value=" in text and "tolerance=" in text


def test_config_error_exit(tmp_path, capsys):
    cfg = write(tmp_path, "[scenario]\nname = solve\n[params]\nn = 2\nzzz = 1\n")
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == EXIT_CONFIG
    assert "unknown key" in capsys.readouterr().err


def test_io_error_exits(tmp_path):
    assert main(["solve", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path)]) == EXIT_IO
    cfg = write(tmp_path, SOLVE.format(verdict="EqualityHolds"))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["solve", "--config", cfg, "--out", str(blocker)]) == EXIT_IO


def test_domain_error_in_config_is_config_error(tmp_path):
    bad = SOLVE.format(verdict="EqualityHolds").replace("alpha = 0", "alpha = -1.5")
    cfg = write(tmp_path, bad)
    assert main(["solve", "--config", cfg, "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_reports_reproducible_and_thread_independent(tmp_path):
    cfg = parse_config(SCAN)
    run_scenario(cfg, tmp_path / "a", threads=1)
    run_scenario(cfg, tmp_path / "b", threads=1)
    run_scenario(cfg, tmp_path / "c", threads=3)
    a = (tmp_path / "a" / "bol-scan.json").read_bytes()
    assert a == (tmp_path / "b" / "bol-scan.json").read_bytes()
    assert a == (tmp_path / "c" / "bol-scan.json").read_bytes()
    assert (tmp_path / "a" / "bol-scan_table.csv").read_bytes() == \
        (tmp_path / "c" / "bol-scan_table.csv").read_bytes()
    report = json.loads(a)
    assert report["passed"] and len(report["rows"]) == 8


def test_threads_env_override(tmp_path, monkeypatch):
    from qcurv.scenarios import _threads
    monkeypatch.setenv("QCURV_THREADS", "3")
    assert _threads(None) == 3
    assert _threads(2) == 2


def test_report_nan_becomes_null(tmp_path):
    from qcurv.scenarios import _clean
    assert _clean({"a": math.nan, "b": [math.inf, 1.5], "c": np.float64(2.0)}) == \
        {"a": None, "b": [None, 1.5], "c": 2.0}


def test_emit_profile_round_trip(tmp_path, flat2):
    params, grid, kernel = flat2
    u = RadialField(singular_bubble(grid.nodes, 0.0), math.log(2.0), 2.0)
    path = tmp_path / "p.csv"
    emit_profile(u, grid, params, Constant(1.0), path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert np.array_equal(data[:, 0], grid.nodes)
    assert np.array_equal(data[:, 1], u.values)
    recomputed = data[:, 3] * data[:, 0] ** (2 * params.alpha) * np.exp(2 * data[:, 1])
    assert np.max(np.abs(recomputed - data[:, 2]) / np.abs(data[:, 2])) < 1e-12


def test_emit_profile_density_with_singular_weight(tmp_path):
    params, grid, kernel = setup(2, -0.5)
    u, _ = solve_normal(Constant(1.0), params, grid, FixedOrigin(0.0), kernel=kernel)
    path = tmp_path / "p.csv"
    emit_profile(u, grid, params, Constant(2.0), path)
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    recomputed = data[:, 3] * data[:, 0] ** (2 * params.alpha) * np.exp(2 * data[:, 1])
    assert np.max(np.abs(recomputed - data[:, 2]) / np.abs(data[:, 2])) < 1e-12


def test_emit_profile_rejects_empty(tmp_path, flat2):
    params, grid, _ = flat2
    with pytest.raises(ValueError):
        emit_profile(RadialField(np.array([]), 0.0), grid, params, Constant(1.0), tmp_path / "e.csv")


def test_module_entry_point(tmp_path):
    import subprocess
    import sys
    cfg = write(tmp_path, SOLVE.format(verdict="EqualityHolds"))
    proc = subprocess.run([sys.executable, "-m", "qcurv.cli", "solve", "--config", cfg,
                           "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0 and "[PASS]" in proc.stdout
