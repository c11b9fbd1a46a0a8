import json
import math
import subprocess
import sys

import pytest

from shadow_twirl.cli import HEADER, main, parse_f_grid, parse_int_grid
from shadow_twirl.errors import InputError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_effective_f(tmp_path, capsys):
    p = tmp_path / "deph.json"
    p.write_text(json.dumps({"q": 2, "diag": {"X": 0.9, "Y": 0.9, "Z": 1.0}}))
    assert run(capsys, "effective-f", str(p)) == (0, "0.933333333333\n", "")
    p.write_text(json.dumps({"q": 2, "diag": {"X": 0.95, "Y": 0.95, "Z": 0.95}}))
    assert run(capsys, "effective-f", str(p))[1] == "0.950000000000\n"
    p.write_text(json.dumps({"q": 2, "diag": {"X": -1, "Y": -1, "Z": 1}}))
    code, _, err = run(capsys, "effective-f", str(p))
    assert code == 2 and "0 < f <= 1" in err
    p.write_text('{"q": 2,\n "diag": {"X": 0.9,,}}')
    code, _, err = run(capsys, "effective-f", str(p))
    assert code == 2 and "line 2" in err
    p.write_text(json.dumps({"q": 2, "diag": {"X": 0.9}, "noise": 1}))
    code, _, err = run(capsys, "effective-f", str(p))
    assert code == 2 and "noise" in err


def test_threshold(capsys):
    assert run(capsys, "threshold", "renyi", "--q", "2", "--n", "2")[1] == "0.9396\n"
    assert run(capsys, "threshold", "renyi", "--q", "9", "--n", "10")[1] == "0.9769\n"
    code, out, _ = run(capsys, "threshold", "pauli", "--q", "2", "--precision", "8")
    assert code == 0 and out == "0.91537082\n"
    code, out, _ = run(capsys, "threshold", "pauli", "--q", "3", "--json")
    assert json.loads(out)["f_th"] == pytest.approx(0.9349, abs=5e-5)
    assert run(capsys, "threshold", "renyi", "--q", "2")[0] == 2


def test_tmax(capsys):
    assert run(capsys, "tmax", "--q", "2", "--f", "0.99")[1] == "3\n"
    code, out, _ = run(capsys, "tmax", "--q", "2", "--f", "1.0")
    assert code == 0 and out.startswith("unbounded (t_cap reached")


def test_meanfield(capsys):
    code, out, _ = run(capsys, "meanfield", "--q", "2", "--f", "0.99", "--k", "inf", "--json")
    assert code == 0 and json.loads(out)["valid"]
    t1 = float(run(capsys, "meanfield", "--q", "2", "--f", "1", "--k", "10000")[1])
    t2 = float(run(capsys, "meanfield", "--q", "2", "--f", "1", "--k", "100000")[1])
    gamma = 2 * math.log(5 / 4)
    assert abs((t2 - t1) * gamma / math.log(10) - 1) < 0.3
    assert run(capsys, "meanfield", "--q", "2", "--k", "x")[0] == 2


def test_shadow_norm_single_point(capsys):
    code, out, _ = run(capsys, "shadow-norm", "--q", "2", "--f", "1", "--k", "1", "--t", "0", "--engine", "exact")
    lines = out.splitlines()
    assert code == 0 and lines[0] == HEADER
    row = dict(zip(HEADER.split(","), lines[1].split(",")))
    assert float(row["log_shadow_norm"]) == pytest.approx(math.log(3), abs=1e-15)
    assert row["engine"] == "exact" and row["runtime_ms"] == ""


def test_engine_all_spread(capsys):
    code, out, _ = run(capsys, "shadow-norm", "--q", "2", "--f", "0.95", "--k", "4", "--t", "1",
                       "--engine", "all", "--samples", "100000")
    assert code == 0
    lines = [l for l in out.splitlines() if not l.startswith("#")]
    assert lines[0] == HEADER + ",spread"
    engines = [l.split(",")[8] for l in lines[1:]]
    assert engines == ["exact", "mps", "mc", "closed"]
    assert float(lines[1].split(",")[-1]) <= 1e-7
    sigma = float(out.split("mc deviation from exact: ")[1].split()[0])
    assert sigma <= 3


def test_renyi_verb(capsys):
    code, out, _ = run(capsys, "renyi", "--q", "2", "--n", "2", "--A", "1", "--t", "0", "--json")
    rec = json.loads(out)
    assert code == 0 and rec["beta_noisy"] is None
    assert math.exp(rec["log_shadow_norm"]) == pytest.approx(7.0)
    assert run(capsys, "renyi", "--q", "2", "--n", "2", "--A", "2", "--engine", "exact")[0] == 2


def test_optimal_depth(capsys):
    code, out, _ = run(capsys, "optimal-depth", "--q", "2", "--f", "0.9", "--k", "6")
    assert code == 0 and out.split("\t")[0] == "0"


def test_mc_refuses_noisy_estimates(capsys):
    code, _, err = run(capsys, "shadow-norm", "--q", "2", "--f", "0.5", "--k", "8", "--t", "3",
                       "--engine", "mc", "--samples", "1000")
    assert code == 1 and "relative error" in err


def test_scan_csv_is_byte_stable(tmp_path, capsys):
    args = ["scan", "--q", "2,3", "--f", "1,0.95", "--k", "1:4", "--t", "0:2", "--engine", "exact"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, *args, "--out", str(a))[0] == 0
    assert run(capsys, *args, "--out", str(b), "--threads", "3")[0] == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == HEADER and len(lines) == 1 + 2 * 2 * 4 * 3
    rows = [dict(zip(HEADER.split(","), l.split(","))) for l in lines[1:]]
    keys = [(int(r["q"]), -float(r["f"]), int(r["k"]), int(r["t"])) for r in rows]
    assert keys == sorted(keys)
    for r in rows:
        ln = math.log(float(r["beta_noiseless"])) - 2 * math.log(float(r["beta_noisy"]))
        assert float(r["log_shadow_norm"]) == pytest.approx(ln, abs=1e-12)
    assert rows[0]["f"] == "1" and float(rows[0]["log_shadow_norm"]) == pytest.approx(math.log(3))


def test_scan_json_and_timing(capsys):
    code, out, _ = run(capsys, "scan", "--k", "2", "--t", "1", "--json", "--timing")
    rec = json.loads(out.splitlines()[0])
    assert code == 0 and rec["runtime_ms"] >= 0 and rec["engine"] == "mps"


def test_scan_threshold_token_and_fit(capsys):
    code, out, err = run(capsys, "scan", "--q", "2", "--f", "1,th", "--k", "2:8", "--fit")
    assert code == 0
    fits = [l for l in err.splitlines() if l.startswith("base")]
    assert len(fits) == 2 and "k=5..8" in fits[0]


def test_scan_renyi(capsys):
    code, out, _ = run(capsys, "scan", "--n", "2", "--A", "2,4", "--t", "0:1", "--engine", "all")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 1 + 2 * 2 * 2
    assert lines[1].split(",")[2] == "2"


def test_scan_input_errors(tmp_path, capsys):
    assert run(capsys, "scan", "--k", "1:100000", "--t", "0:9")[0] == 2
    assert run(capsys, "scan", "--k", "2", "--t", "9999")[0] == 2
    assert run(capsys, "scan", "--k", "2", "--out", str(tmp_path / "no" / "x.csv"))[0] == 2
    assert run(capsys, "scan")[0] == 2
    assert run(capsys, "scan", "--k", "2", "--f", "1.5")[0] == 2


def test_grid_parsing():
    assert parse_int_grid("1,3:5,10:14:2", "k") == [1, 3, 4, 5, 10, 12, 14]
    assert parse_f_grid("1,th,th+0.001") == [("value", 1.0), ("th", 0.0), ("th", 0.001)]
    with pytest.raises(InputError):
        parse_int_grid("1:2:0", "k")
    with pytest.raises(InputError):
        parse_f_grid("one")


def test_threads_env(monkeypatch, capsys):
    monkeypatch.setenv("SHADOW_TWIRL_THREADS", "zero")
    assert run(capsys, "scan", "--k", "2", "--t", "0")[0] == 2
    monkeypatch.setenv("SHADOW_TWIRL_THREADS", "2")
    assert run(capsys, "scan", "--k", "2", "--t", "0")[0] == 0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "shadow_twirl", "threshold", "renyi", "--q", "2", "--n", "3"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and res.stdout == "0.9564\n"
    res = subprocess.run([sys.executable, "-m", "shadow_twirl", "threshold", "bogus"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 2
