import csv
import math
import time

import pytest

from dacc import cli, graph, scenario, sim

from conftest import load


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_design_from_scenario(capsys):
    code, out, _ = run(capsys, "design", "--scenario", "ieee33_dacc.scn")
    assert code == 0
    assert "sigma_lower_p = 0.0287" in out
    assert "I_sigma^f = [0.891" in out
    assert "eta = " in out and "ultimate_bound" in out


def test_design_without_adversary(capsys):
    code, out, _ = run(capsys, "design", "--g", "2", "--f", "0", "--h", "4", "--d-max", "5")
    assert code == 0
    lower = float(out.split("sigma_lower_p = ")[1].split()[0])
    sigma = float(out.split("\nsigma = ")[1].split()[0])
    assert sigma == pytest.approx(lower, rel=2e-3)


def test_design_infeasible(capsys):
    code, out, _ = run(capsys, "design", "--g", "1", "--f", "4", "--h", "5", "--d-max", "5", "--c-m", "3.2")
    assert code == 2
    assert "increase g,c_m or decrease f,h,c_n" in out


def test_design_bad_input(capsys):
    assert run(capsys, "design", "--g", "2")[0] == 1
    assert run(capsys, "design", "--g", "2", "--f", "3", "--h", "4", "--d-max", "2")[0] == 1
    assert run(capsys, "design", "--scenario", "/no/such.scn")[0] == 1


def test_graph_check_bundled(capsys):
    code, out, _ = run(capsys, "graph-check", "ieee33.graph", "--g", "2", "--f", "3")
    assert code == 0
    assert "depth: 4" in out
    assert "robustness: 5-robust" in out
    assert "assumption 1 (g=2, f=3): satisfied" in out
    assert "d_max: 9" in out and "effective d_max: 5" in out


def test_graph_check_star_and_cap(capsys, tmp_path):
    p = tmp_path / "star.graph"
    p.write_text("leaders: L\nfollowers: a b c\nL a\nL b\nL c\n")
    code, out, _ = run(capsys, "graph-check", str(p))
    assert code == 0 and "level 1: a b c" in out and "depth: 1" in out
    code, out, _ = run(capsys, "graph-check", "ieee33.graph", "--cap", "4")
    assert "unknown: above enumeration cap" in out


def test_graph_check_parse_error(capsys, tmp_path):
    p = tmp_path / "bad.graph"
    p.write_text("leaders: L\nfollowers: a\nL\n")
    assert run(capsys, "graph-check", str(p))[0] == 1
    p.write_text("leaders: L\nfollowers: a b\nL a\n")
    assert run(capsys, "graph-check", str(p))[0] == 1


def test_simulate_smoke(capsys, tmp_path):
    t0 = time.perf_counter()
    code, out, _ = run(capsys, "simulate", "--scenario", "ieee33_dacc.scn", "--stage", "1", "--steps", "10",
                       "--out", str(tmp_path))
    assert time.perf_counter() - t0 < 1.0
    assert code == 0
    for name in ("trace.csv", "summary.csv", "frequency.csv", "power.csv", "log1p_norm.csv"):
        assert (tmp_path / name).exists()
    rows = sim.read_trace_csv(tmp_path / "trace.csv")
    assert len(rows) == 11 * 17


def test_simulate_full_run_and_verdict_exit(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--scenario", "ieee33_dacc.scn", "--out", str(tmp_path / "d"),
                       "--assert-lruub")
    assert code == 0 and "overall: safety_ok=True uub_ok=True" in out
    code, out, _ = run(capsys, "simulate", "--scenario", "ieee33_dacc.scn", "--protocol", "tc",
                       "--out", str(tmp_path / "t"), "--assert-lruub")
    assert code == 3
    code, _, _ = run(capsys, "simulate", "--scenario", "ieee33_dacc.scn", "--sigma", "-1",
                     "--out", str(tmp_path / "x"))
    assert code == 1


def test_simulate_auto_parameters(capsys, tmp_path):
    text = scenario.bundled("ieee33_dacc.scn").read_text()
    text = text.replace("sigma = 0.9", "sigma = auto").replace("eta = 0.4", "eta = auto")
    text = text.replace("graph = ieee33.graph", f"graph = {scenario.bundled('ieee33.graph')}")
    text = text.replace("roster = ieee33.roster", f"roster = {scenario.bundled('ieee33.roster')}")
    p = tmp_path / "auto.scn"
    p.write_text(text)
    code, out, _ = run(capsys, "simulate", "--scenario", str(p), "--stage", "1", "--steps", "5",
                       "--out", str(tmp_path))
    assert code == 0 and "dacc(sigma=0.891" in out


def test_compare(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("DACC_SIM_THREADS", "2")
    code, out, _ = run(capsys, "compare", "--scenario", "ieee33_dacc.scn", "--out", str(tmp_path))
    assert code == 0
    with open(tmp_path / "compare.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "time", "stage", "dacc(sigma=0.9,eta=0.4)", "tc", "wmsr(f=2)"]
    assert len(rows) == 602


def test_compare_identical_protocols_give_identical_columns(capsys, tmp_path):
    code, _, _ = run(capsys, "compare", "--scenario", "ieee33_noisy.scn", "--protocols", "dacc,dacc",
                     "--out", str(tmp_path))
    assert code == 0
    with open(tmp_path / "compare.csv") as fh:
        rows = list(csv.reader(fh))[1:]
    assert all(r[3] == r[4] for r in rows)


def test_compare_needs_two_protocols(capsys, tmp_path, monkeypatch):
    assert run(capsys, "compare", "--scenario", "ieee33_dacc.scn", "--protocols", "dacc",
               "--out", str(tmp_path))[0] == 1
    monkeypatch.setenv("DACC_SIM_THREADS", "zero")
    assert run(capsys, "compare", "--scenario", "ieee33_dacc.scn", "--out", str(tmp_path))[0] == 1


def test_compare_runs_concurrently_without_changing_results():
    sf = load("ieee33_dacc.scn")
    protocols = [cli.resolve_protocol(sf, n) for n in ("dacc", "tc", "wmsr")]
    serial = [sim.run(sf.scenario, sf.graph, p, 0) for p in protocols]
    parallel = cli.compare(sf, protocols, 0, threads=3)
    for a, b in zip(serial, parallel):
        assert (a.theta == b.theta).all()
