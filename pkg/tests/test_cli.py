import csv
import json
import subprocess
import sys

import pytest

from madec.cli import main
from madec.instances import load_instance, validate_instance


def run(*argv):
    return main([str(a) for a in argv])


def test_layered_inspect(tmp_path, capsys):
    out = tmp_path / "i2.json"
    assert run("construct", "layered", "--L", 3, "--cprob", 1, "--out", out) == 0
    capsys.readouterr()
    assert run("inspect", out) == 0
    text = capsys.readouterr().out
    assert "|Π|=64" in text and "|M|=64" in text and "|O|=135" in text


def test_inspect_json(tmp_path, capsys):
    out = tmp_path / "t.json"
    run("construct", "twin", "--params", "N=8", "T=64", "eps=0.5", "--out", out)
    capsys.readouterr()
    assert run("inspect", out, "--json") == 0
    info = json.loads(capsys.readouterr().out)
    assert info["|M|"] == 8 and info["problems"] == []


def test_verify_mwu(tmp_path):
    out = tmp_path / "r.json"
    assert run("verify", "--suite", "mwu", "--out", out) == 0
    rep = json.loads(out.read_text())
    assert rep["suite"] == "mwu" and rep["pass"] is True


def test_verify_failure_exit_code(tmp_path):
    assert run("verify", "--suite", "gap-bounding", "--out", tmp_path / "g.json") == 1


def test_verify_params(tmp_path):
    out = tmp_path / "r.json"
    assert run("verify", "--suite", "dec-ordering", "--params", "n_classes=2", "gammas=5,20", "--out", out) == 0
    assert len(json.loads(out.read_text())["claims"]) == 2 * 2 * 2


def test_simulate_needs_seed(tmp_path):
    inst = tmp_path / "b.json"
    run("construct", "bandit-gap", "--out", inst)
    assert run("simulate", "--instance", inst, "--true-model", "d=2^-2,a=1", "--algo", "e2d", "--T", 5) == 2


def test_simulate_csv(tmp_path):
    inst, out = tmp_path / "b.json", tmp_path / "runs.csv"
    run("construct", "bandit-gap", "--params", "L=3", "A=2", "--out", inst)
    args = ("simulate", "--instance", inst, "--true-model", "d=2^-2,a=1", "--algo", "e2d", "--T", 20,
            "--reps", 3, "--seed", 7, "--gamma", 4, "--out", out)
    assert run(*args) == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["rep", "seed", "algo", "T", "risk", "wallclock_ms"]
    assert [r["rep"] for r in rows] == ["0", "1", "2"]
    first = [(r["seed"], r["risk"]) for r in rows]
    assert run(*args) == 0
    assert [(r["seed"], r["risk"]) for r in csv.DictReader(out.open())] == first


def test_simulate_threads_env(tmp_path, monkeypatch):
    inst, a, b = tmp_path / "n.json", tmp_path / "a.csv", tmp_path / "b.csv"
    run("construct", "needle", "--N", 5, "--delta", 0.05, "--beta", 0.01, "--out", inst)
    base = ("simulate", "--instance", inst, "--true-model", "1", "--algo", "first-hit", "--T", 10, "--reps", 20,
            "--seed", 3)
    monkeypatch.setenv("MADEC_THREADS", "2")
    assert run(*base, "--out", a) == 0
    monkeypatch.setenv("MADEC_THREADS", "1")
    assert run(*base, "--out", b) == 0
    strip = lambda p: [(r["rep"], r["seed"], r["risk"]) for r in csv.DictReader(p.open())]
    assert strip(a) == strip(b)


def test_dec_csv(tmp_path, capsys):
    inst, out = tmp_path / "g.json", tmp_path / "dec.csv"
    run("construct", "random-game", "--seed", 2, "--models", 3, "--out", inst)
    assert run("dec", "--instance", inst, "--variant", "offset", "--gamma", "1,10", "--ref", "uniform",
               "--ref", "model:M0", "--out", out) == 0
    rows = list(csv.DictReader(out.open()))
    assert list(rows[0]) == ["variant", "param", "ref", "value", "gap", "bound_direction"]
    assert len(rows) == 4
    assert float(rows[1]["value"]) <= float(rows[0]["value"]) + 1e-9


def test_dec_grid_and_mixture_files(tmp_path):
    inst, grid, mix, out = (tmp_path / n for n in ("g.json", "grid.json", "mix.json", "d.csv"))
    run("construct", "random-game", "--seed", 2, "--out", inst)
    grid.write_text(json.dumps([{"pure": [0, 0]}, {"joint": [0.25] * 4, "label": "u"}]))
    mix.write_text(json.dumps({"weights": {"M0": 0.5, "M1": 0.5}}))
    assert run("dec", "--instance", inst, "--variant", "constrained", "--eps", "0.3", "--ref", f"file:{mix}",
               "--grid", f"file:{grid}", "--out", out) == 0
    assert len(list(csv.DictReader(out.open()))) == 1


def test_dec_missing_gamma(tmp_path):
    inst = tmp_path / "g.json"
    run("construct", "random-game", "--seed", 2, "--out", inst)
    assert run("dec", "--instance", inst, "--variant", "offset") == 2


def test_usage_errors(tmp_path):
    assert run("construct", "bogus", "--out", tmp_path / "x") == 2
    assert run("construct", "layered", "--Q", 1, "--out", tmp_path / "x") == 2
    assert run("construct", "random-game", "--out", tmp_path / "x") == 2
    assert run("inspect", tmp_path / "missing.json") == 2
    assert run("nope") == 2
    assert not (tmp_path / "x").exists()


def test_malformed_instance(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"K": 1, "kind": "HR", "pure_sets": [["a"]], "obs": [{"id": "x", "rewards": []}],
                               "models": [{"label": "m", "kernel": [["0.5"]]}]}))
    assert run("inspect", bad) == 2
    assert "models[0]" in capsys.readouterr().err


@pytest.mark.parametrize("name,params", [
    ("twin", ["N=8", "which=2"]),
    ("separation", ["A=2"]),
    ("bandit-gap", []),
    ("needle", ["N=3", "delta=0.1", "beta=0.05"]),
])
def test_round_trip_validates(tmp_path, name, params):
    out = tmp_path / "i.json"
    assert run("construct", name, "--params", *params, "--out", out) == 0
    inst = load_instance(out)
    assert validate_instance(inst)["ok"]
    again = tmp_path / "j.json"
    from madec.instances import save_instance
    save_instance(inst, again)
    assert out.read_text() == again.read_text()


def test_reductions_from_files(tmp_path):
    g, h, e, ind = (tmp_path / n for n in ("g.json", "h.json", "e.json", "i.json"))
    run("construct", "random-game", "--seed", 1, "--kind", "NE", "--out", g)
    assert run("construct", "ma-to-hr", "--instance", g, "--out", h) == 0
    assert run("construct", "hr-to-ma", "--instance", h, "--V", 3, "--out", e) == 0
    assert run("construct", "induced", "--instance", g, "--player", 1, "--out", ind) == 0
    assert load_instance(e).n_models == 3 * 3
    assert load_instance(ind).n_models == 3 * 2


def test_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "madec.cli", "verify", "--suite", "mwu",
                          "--params", "n_seq=3"], capture_output=True, text=True)
    assert res.returncode == 0
    assert json.loads(res.stdout)["pass"] is True


def test_dash_out_writes_stdout(tmp_path, capsys, monkeypatch):
    monkeypatch.chdir(tmp_path)
    inst = tmp_path / "l.json"
    assert run("construct", "layered", "--L", "2", "--out", inst) == 0
    capsys.readouterr()
    assert run("dec", "--instance", inst, "--variant", "offset", "--gamma", "1", "--out", "-") == 0
    assert capsys.readouterr().out.startswith("variant,param,ref")
    assert not (tmp_path / "-").exists()
