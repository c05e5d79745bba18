import csv
import json

import numpy as np
import pytest

from hhwalk import cli
from hhwalk import experiments as ex
from hhwalk.errors import ConfigError

SMALL = {
    "n_universe": 20,
    "steps": 20_000,
    "figures": {"alpha": [1.0], "beta": [0.1, 10.0], "gamma": 1.0},
    "sojourn": {"templates": ["C1", "C3", "R6", "R7"], "samples": 2000},
}


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(SMALL))
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run(config, out, *extra):
    return cli.main([extra[0], "--config", str(config), "--out-dir", str(out), *extra[1:]])


def test_generate_k4(tmp_path, monkeypatch):
    monkeypatch.delenv(ex.SEED_ENV, raising=False)
    cfg = tmp_path / "k4.json"
    cfg.write_text(json.dumps({"n_universe": 4, "degrees": {"explicit": [3, 3, 3, 3]}}))
    assert run(cfg, tmp_path / "o", "generate") == 0
    meta = json.loads((tmp_path / "o" / "metadata.json").read_text())
    assert meta["household_nodes"] == 12 and meta["universe_edges"] == 6
    assert meta["connected"] is True


def test_generate_default_config(tmp_path, monkeypatch):
    monkeypatch.delenv(ex.SEED_ENV, raising=False)
    assert cli.main(["generate", "--out-dir", str(tmp_path / "a")]) == 0
    meta = json.loads((tmp_path / "a" / "metadata.json").read_text())
    assert meta["seed"] == 42 and meta["degree_sum"] % 2 == 0 and meta["connected"]
    assert cli.main(["generate", "--out-dir", str(tmp_path / "b")]) == 0
    for name in ("universe.edges", "household.edges", "communities.txt", "metadata.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_precedence(tmp_path, config, monkeypatch):
    monkeypatch.setenv(ex.SEED_ENV, "9")
    assert ex.load_config(config).seed == 9
    assert ex.load_config(config, {"seed": 3}).seed == 3
    monkeypatch.delenv(ex.SEED_ENV)
    assert ex.load_config(config).seed == 42


def test_bad_config(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n_universe": 1}))
    with pytest.raises(ConfigError):
        ex.load_config(bad)
    bad.write_text(json.dumps({"sojourn": {"templates": ["Q3"]}}))
    with pytest.raises(ConfigError):
        ex.load_config(bad)
    assert cli.main(["generate", "--config", str(bad)]) == 1


def test_compare(tmp_path, config, monkeypatch):
    monkeypatch.delenv(ex.SEED_ENV, raising=False)
    out = tmp_path / "c"
    assert run(config, out, "compare") == 0
    rows = read_csv(out / "compare_a1_b10_g1.csv")
    pa = np.array([float(r["pi_analytic"]) for r in rows])
    po = np.array([float(r["pi_oracle"]) for r in rows])
    assert abs(pa.sum() - 1) < 1e-12 and np.max(np.abs(pa - po)) < 1e-8
    summary = json.loads((out / "compare_summary.json").read_text())
    assert summary["cells"][0]["max_abs_diff_analytic_oracle"] < 1e-8


def test_compare_degenerate_matches_srw(tmp_path, monkeypatch):
    monkeypatch.delenv(ex.SEED_ENV, raising=False)
    cfg = tmp_path / "deg.json"
    cfg.write_text(json.dumps({**SMALL, "params": {"alpha": 2, "beta": 1, "gamma": 1}}))
    assert run(cfg, tmp_path / "d", "compare") == 0
    rows = read_csv(tmp_path / "d" / "compare_a2_b1_g1.csv")
    diff = max(abs(float(r["pi_analytic"]) - float(r["pi_srw"])) for r in rows)
    assert diff < 1e-10


def test_compare_tolerance_exit(tmp_path, config, monkeypatch):
    monkeypatch.delenv(ex.SEED_ENV, raising=False)
    real = ex.compare_household

    def skewed(*a, **k):
        rep = real(*a, **k)
        rep.pi_oracle = rep.pi_oracle[::-1].copy()
        return rep

    monkeypatch.setattr(ex, "compare_household", skewed)
    assert run(config, tmp_path / "x", "compare") == 2


def test_sojourn_csv(tmp_path, config):
    out = tmp_path / "s"
    assert run(config, out, "sojourn") == 0
    rows = read_csv(out / "sojourn.csv")
    assert {r["template"] for r in rows} == {"C1", "C3", "R6", "R7"}
    for r in rows:
        cf, gen = float(r["E_closed_form"]), float(r["E_generic"])
        assert abs(cf - gen) < 1e-10
        mc, se = float(r["E_montecarlo"]), float(r["mc_stderr"])
        if se > 0:
            assert abs(mc - cf) < 5 * se


def test_figures_and_rerun_identical(tmp_path, config, monkeypatch):
    monkeypatch.delenv(ex.SEED_ENV, raising=False)
    a, b = tmp_path / "fa", tmp_path / "fb"
    assert run(config, a, "figures") == 0
    assert run(config, b, "figures") == 0
    names = sorted(p.name for p in a.iterdir())
    assert "panel_a1_b10_g1.csv" in names and "panel_a1_b10_g1.svg" in names
    assert "figure_sweep.svg" in names and "figure_limits.svg" in names
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_oracle_and_walk(tmp_path, config, monkeypatch):
    monkeypatch.delenv(ex.SEED_ENV, raising=False)
    out = tmp_path / "w"
    assert run(config, out, "oracle") == 0
    edges = read_csv(out / "oracle_edges_a1_b10_g1.csv")
    assert abs(sum(float(r["pi_edge"]) for r in edges) - 1) < 1e-12
    assert run(config, out, "walk", "--steps", "5000") == 0
    occ = read_csv(out / "occupancy_a1_b10_g1.csv")
    assert sum(int(r["visits"]) for r in occ) == 5000


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "hhwalk", "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "generate" in res.stdout
