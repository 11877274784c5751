import csv
import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from hysir.cli import main, memory_from_json
from hysir.config import load_config, parse_config
from hysir.errors import ValidationError
from hysir.preisach import MemoryStaircase, RelayBank

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def cfg_file(tmp_path, name, **overrides):
    obj = json.loads((CONFIGS / name).read_text())
    for path, value in overrides.items():
        sec, key = path.split("__")
        obj.setdefault(sec, {})[key] = value
    f = tmp_path / f"{name}"
    f.write_text(json.dumps(obj))
    return f


def test_simulate_outputs(tmp_path, capsys):
    cfg = cfg_file(tmp_path, "endemic.json", run__t_end=5000)
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    for name in ("trajectory.csv", "events.json", "final_memory.json", "attractor.json"):
        assert (out / name).exists()
    with open(out / "trajectory.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "I", "S", "R", "v"]
    t = [float(r[0]) for r in rows[1:]]
    assert all(b > a for a, b in zip(t, t[1:]))
    att = json.loads((out / "attractor.json").read_text())
    assert att["kind"] == "endemic_equilibrium"
    assert json.loads(capsys.readouterr().out)["kind"] == "endemic_equilibrium"
    events = json.loads((out / "events.json").read_text())
    assert {e["kind"] for e in events} == {"nullcline_crossing"}


def test_simulate_cycle(tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(CONFIGS / "cycle.json"), "--out", str(out)]) == 0
    assert json.loads((out / "attractor.json").read_text())["kind"] == "periodic_orbit"


def test_determinism_and_roundtrip(tmp_path):
    cfg = cfg_file(tmp_path, "cycle.json", run__t_end=3000)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", str(cfg), "--out", str(a)]) == 0
    assert main(["simulate", "--config", str(cfg), "--out", str(b)]) == 0
    for name in ("trajectory.csv", "events.json", "final_memory.json", "attractor.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    obj = json.loads((a / "final_memory.json").read_text())
    mem = memory_from_json(obj)
    assert isinstance(mem, MemoryStaircase)
    assert mem.to_json() == obj
    assert MemoryStaircase.from_json(mem.to_json()) == mem


def test_relay_bank_roundtrip(tmp_path):
    cfg = cfg_file(tmp_path, "relay_bank.json", run__t_end=300)
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    obj = json.loads((out / "final_memory.json").read_text())
    bank = memory_from_json(obj)
    assert isinstance(bank, RelayBank) and RelayBank.from_json(bank.to_json()) == bank
    events = json.loads((out / "events.json").read_text())
    assert any(e["kind"] == "relay_switch" for e in events)


def test_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(bad), "--out", str(out)]) == 2
    assert not out.exists()
    assert "malformed JSON" in capsys.readouterr().err


@pytest.mark.parametrize("patch, msg", [
    ({"params": {"beta": 10.8, "mu": 0.0006}}, "gamma"),
    ({"init": {"I0": 0.6, "S0": 0.6}}, "I0"),
    ({"density": {"kind": "gaussian", "alpha_m1": 0.1, "alpha_m2": 0.2, "sigma": -1}}, "sigma"),
    ({"memory": {"mode": "relay_bank", "N": 0}}, "memory.N"),
    ({"solver": {"rtol_I": 0}}, "rtol_I"),
    ({"bogus": 1}, "bogus"),
    ({"density": {"kind": "uniform", "c": 1.0, "v_nat": 0.1}}, "v_nat"),
])
def test_invalid_config(tmp_path, capsys, patch, msg):
    obj = json.loads((CONFIGS / "endemic.json").read_text())
    obj.update(patch)
    f = tmp_path / "c.json"
    f.write_text(json.dumps(obj))
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(f), "--out", str(out)]) == 2
    assert msg in capsys.readouterr().err
    assert not out.exists()


def test_missing_config(tmp_path):
    assert main(["stability", "--config", str(tmp_path / "nope.json")]) == 2


def test_sweep_usage_errors(tmp_path, capsys):
    cfg = str(CONFIGS / "cycle.json")
    assert main(["sweep", "--config", cfg, "--param", "sigma", "--values", ""]) == 2
    assert main(["sweep", "--config", cfg, "--param", "gamma", "--values", "0.1"]) == 2
    assert main(["sweep", "--config", cfg, "--param", "sigma", "--values", "a,b"]) == 2
    assert main(["sweep", "--config", str(CONFIGS / "no_hysteresis.json"), "--param", "sigma",
                 "--values", "0.1"]) == 2


def test_sweep_sigma(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("HYSIR_THREADS", "3")
    cfg = cfg_file(tmp_path, "cycle.json", run__t_end=20000)
    table = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", str(cfg), "--param", "sigma", "--values", "0.1,0.0009,0.01",
                 "--out", str(table)]) == 0
    rows = list(csv.DictReader(table.open()))
    assert [float(r["value"]) for r in rows] == [0.0009, 0.01, 0.1]
    assert rows[0]["class"] == "periodic_orbit"
    assert rows[-1]["class"] == "endemic_equilibrium"
    assert table.read_text() == capsys.readouterr().out
    # each row equals a single run of the same value
    for r in rows:
        single = cfg_file(tmp_path, "cycle.json", density__sigma=float(r["value"]), run__t_end=20000)
        out = tmp_path / f"single_{r['value']}"
        assert main(["simulate", "--config", str(single), "--out", str(out)]) == 0
        att = json.loads((out / "attractor.json").read_text())
        assert att["kind"] == r["class"]
        if att["kind"] == "periodic_orbit":
            assert repr(att["period"]) == r["period"]
            assert repr(att["averages"]["v_bar"]) == r["v_bar"]
        else:
            assert repr(att["I_star"]) == r["I_star"] and repr(att["v_star"]) == r["v_star"]


def test_sweep_thread_cap_validation(tmp_path, monkeypatch):
    monkeypatch.setenv("HYSIR_THREADS", "many")
    cfg = cfg_file(tmp_path, "cycle.json", run__t_end=100)
    assert main(["sweep", "--config", str(cfg), "--param", "beta", "--values", "10,11"]) == 2


def test_stability(capsys):
    assert main(["stability", "--config", str(CONFIGS / "no_hysteresis.json")]) == 0
    assert json.loads(capsys.readouterr().out)["no_periodic_orbit_guaranteed"] is True
    assert main(["stability", "--config", str(CONFIGS / "cycle.json")]) == 0
    assert json.loads(capsys.readouterr().out)["no_periodic_orbit_guaranteed"] is False
    assert main(["stability", "--config", str(CONFIGS / "r0_below_one.json")]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["status"] == "proposition1" and "global attractor" in rep["note"]


def test_equilibria(capsys):
    assert main(["equilibria", "--config", str(CONFIGS / "cycle.json")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["R0"] == pytest.approx(18.0, rel=1e-12)
    assert out["S_star"] == pytest.approx(0.6 / 10.8, rel=1e-12)
    assert out["infection_free"] == {"I": 0.0, "S": 1.0}
    assert out["I_star_at_v_nat"] == pytest.approx(9.444e-4, rel=1e-3)
    assert out["I_star_at_v_max"] is None  # v_max = 1 exceeds every admissible v0


def test_analyze_matches_simulate(tmp_path, capsys):
    cfg = cfg_file(tmp_path, "cycle.json", run__t_end=20000)
    out = tmp_path / "out"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["analyze", "--config", str(cfg), "--csv", str(out / "trajectory.csv")]) == 0
    again = json.loads(capsys.readouterr().out)
    orig = json.loads((out / "attractor.json").read_text())
    orig["witness"].pop("doublings")
    assert again == orig


def test_analyze_bad_csv(tmp_path):
    f = tmp_path / "t.csv"
    f.write_text("a,b\n1,2\n")
    assert main(["analyze", "--config", str(CONFIGS / "cycle.json"), "--csv", str(f)]) == 2


def test_config_helpers():
    cfg = load_config(CONFIGS / "cycle.json")
    assert cfg.with_value("beta", 9.0).params.beta == 9.0
    assert cfg.with_value("sigma", 0.05).density.sigma == 0.05
    with pytest.raises(ValidationError):
        cfg.with_value("gamma", 0.1)
    with pytest.raises(ValidationError):
        parse_config([])


def test_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "hysir.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "hysir" in res.stdout
    res = subprocess.run([sys.executable, "-m", "hysir.cli", "simulate"], capture_output=True, text=True)
    assert res.returncode == 2
