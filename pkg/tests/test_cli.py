import json
import math
import subprocess
import sys

import numpy as np
import pytest

from mirrorfield import cli
from mirrorfield.errors import NonConvergenceError
from mirrorfield.io import parse_csv


def run(argv, capsys):
    code = cli.run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_flux_csv_matches_plateau(tmp_path, capsys):
    path = tmp_path / "flux.csv"
    code, out, _ = run(["flux", "--trajectory", "thermal", "--kappa", "1", "--grid", "0:20:200",
                        "--out", str(path)], capsys)
    assert code == 0
    assert out.startswith("flux:")
    text = path.read_text()
    lines = text.splitlines()
    assert lines[0].startswith("# mirrorfield ")
    assert any(line.startswith("# seed ") for line in lines)
    columns, data, comments = parse_csv(text)
    assert columns == ["x", "flux"]
    assert any(c.startswith("seed") for c in comments)
    x, f = data[:, 0], data[:, 1]
    i = int(np.argmin(np.abs(x - 10.0)))
    assert abs(x[i] - 10.0) < 0.06
    assert f[i] == pytest.approx(6.6315e-3, rel=0.01)


def test_flux_absolute_units(capsys):
    code, out, _ = run(["flux", "--kappa", "2", "--absolute", "--grid", "10,12", "--format", "json"], capsys)
    assert code == 0
    vals = json.loads(out)["flux"]
    assert vals[0] == pytest.approx(4 / (48 * math.pi), rel=1e-6)


def test_ssa_prints_cross_ratio(capsys):
    code, out, err = run(["ssa", "--trajectory", "identity", "--l", "1", "--kind", "raw"], capsys)
    assert code == 0
    assert "delta = 4.79470" in err
    assert "0.047947" in f"{float(err.split('delta = ')[1]):.6f}"


def test_ssa_counterexample(capsys):
    code, out, err = run(["ssa", "--counterexample", "--format", "json"], capsys)
    assert code == 0
    assert json.loads(out)["delta"] == pytest.approx(math.log(0.75) / 6, abs=1e-3)


@pytest.mark.parametrize("argv", [
    ["flux", "--no-such-flag"],
    ["flux", "--kappa", "0"],
    ["entropy", "--x1", "1", "--x2", "1"],
    ["flux", "--grid", "0:1:1"],
    ["bound", "--r", "-1"],
    ["nosuchcommand"],
])
def test_input_errors_exit_2(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    assert err


def test_nonconvergence_exit_3(monkeypatch, capsys):
    def boom(*a, **k):
        raise NonConvergenceError("did not settle")

    monkeypatch.setattr(cli.qei, "firewall_bound", boom)
    code, _, err = run(["bound"], capsys)
    assert code == 3
    assert "did not settle" in err


def test_config_file_merges_under_flags(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# bound run\nE_fw = 0.02\nr = 2\n")
    code, out, _ = run(["bound", "--config", str(cfg)], capsys)
    assert code == 0 and json.loads(out)["r"] == 2.0 and json.loads(out)["E_fw"] == 0.02
    code, out, _ = run(["bound", "--config", str(cfg), "--r", "3"], capsys)
    assert json.loads(out)["r"] == 3.0 and json.loads(out)["E_fw"] == 0.02
    cfg.write_text("bogus = 1\n")
    assert run(["bound", "--config", str(cfg)], capsys)[0] == 2


def test_deterministic_output(tmp_path, capsys):
    outs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        assert run(["measure", "--seed", "7", "--out", str(path)], capsys)[0] == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert b"# seed 7" in outs[0]


def test_measure_thermal_gain(capsys):
    code, out, err = run(["measure", "--trajectory", "thermal", "--thermal-gain", "--window", "3:5"], capsys)
    assert code == 0
    rate = float(err.split("rate ")[1].split(",")[0])
    assert rate == pytest.approx(-2.0, rel=0.05)


def test_appendix3_and_unruh(capsys):
    code, out, _ = run(["appendix3"], capsys)
    assert code == 0
    rep = json.loads(out)
    assert rep["E_plus"] == pytest.approx(1.60512e-2, rel=1e-4)
    code, out, _ = run(["unruh", "--format", "json"], capsys)
    assert code == 0
    assert json.loads(out)["entropy"] == pytest.approx(math.log(4), abs=1e-3)


def test_entropy_sweep_with_negative_grid(capsys):
    code, out, _ = run(["entropy", "--trajectory", "identity", "--x1", "-30", "--grid=-20:5:6", "--format", "csv"], capsys)
    assert code == 0
    assert "x2,entropy,renormalized_entropy" in out


def test_selftest_subset(capsys):
    code, out, _ = run(["selftest", "--only", "2", "12"], capsys)
    assert code == 0
    assert "[PASS]  2" in out and "[PASS] 12" in out
    assert "2/2 passed" in out


def test_selftest_reports_failure(capsys):
    code, out, _ = run(["selftest", "--only", "3"], capsys)
    assert code == 1
    assert "[FAIL]  3" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "mirrorfield", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("mirrorfield 0.1.0")


def test_parse_grid():
    assert np.allclose(cli.parse_grid("1:100:3:log"), [1, 10, 100])
    assert np.allclose(cli.parse_grid("0.5,1,2"), [0.5, 1, 2])
    for bad in ("1:2", "0:1:1", "0:1:3:cubic", "-1:1:3:log", "a,b"):
        with pytest.raises(Exception):
            cli.parse_grid(bad)
