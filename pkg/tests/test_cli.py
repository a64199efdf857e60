import csv
import json

import pytest

from jumpsde import generate_bundle
from jumpsde.cli import _preset_path, load_config, main


TINY_CONFIG = """
[model]
alpha_m1 = 2.0
alpha0 = 1.0
alpha1 = 1.5
alpha2 = 5.0
alpha3 = 1.0
gamma = 3.0
rho = 1.5
lambda = {lam}
x0 = 1.0
T = 1.0

[jump]
family = linear
param = -0.5

[scheme]
scheme = {scheme}

[ladder]
m_list = {m_list}
m_ref = {m_ref}

[run]
n_paths = {n_paths}
global_seed = {seed}
parallelism = 1
fast_mode = false

[output]
directory = out
formats = csv, json
"""


def _write_config(tmp_path, name="tiny.cfg", lam=1.0, scheme="tjabem",
                  m_list="8, 16", m_ref=128, n_paths=30, seed=11):
    path = tmp_path / name
    path.write_text(
        TINY_CONFIG.format(
            lam=lam, scheme=scheme, m_list=m_list, m_ref=m_ref,
            n_paths=n_paths, seed=seed,
        )
    )
    return path


def test_load_preset_files():
    for name in ("set1", "set2"):
        config = load_config(_preset_path(name))
        assert config.params.rho == 1.5
        assert config.m_ref == 4096
        assert config.m_list == (32, 64, 128, 256, 512)
        assert config.jump.label == "linear:-0.5"
    assert load_config(_preset_path("set1")).params.gamma == 3.0
    assert load_config(_preset_path("set2")).params.gamma == 3.5


def test_validate_preset_passes(capsys):
    assert main(["validate", "--preset", "set1"]) == 0
    out = capsys.readouterr().out
    assert "regime: supercritical" in out
    assert "Q: 0.0" in out
    assert "all gates passed" in out


def test_validate_rejects_invalid_regime(tmp_path, capsys):
    path = _write_config(tmp_path)
    text = path.read_text().replace("gamma = 3.0", "gamma = 1.8")
    path.write_text(text)
    assert main(["validate", "--config", str(path)]) == 1
    out = capsys.readouterr().out
    assert "FAIL parameter gate" in out
    assert "Invalid regime" in out


def test_validate_rejects_bad_jump(capsys):
    assert main(["validate", "--preset", "set1", "--h", "linear:-1.5"]) == 1
    out = capsys.readouterr().out
    assert "FAIL jump gate" in out


def test_validate_warns_on_degenerate_band(capsys):
    assert main(["validate", "--preset", "set1", "--h", "sine:1"]) == 0
    out = capsys.readouterr().out
    assert "warning: transform band" in out


def test_simulate_zero_intensity_has_no_jumps(tmp_path, capsys):
    config = _write_config(tmp_path, lam=0.0)
    out_dir = tmp_path / "run"
    assert main(["simulate", "--config", str(config), "--out", str(out_dir)]) == 0
    rows = list(csv.DictReader(open(out_dir / "trajectory.csv")))
    assert len(rows) == 8 + 1  # uniform grid at m_list[0] = 8
    assert all(row["is_jump"] == "0" for row in rows)
    assert all(float(row["x"]) > 0.0 for row in rows)


def test_simulate_is_deterministic(tmp_path):
    config = _write_config(tmp_path)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", str(config), "--out", str(out_a)]) == 0
    assert main(["simulate", "--config", str(config), "--out", str(out_b)]) == 0
    assert (out_a / "trajectory.csv").read_bytes() == (out_b / "trajectory.csv").read_bytes()


def test_simulate_row_count_matches_node_rule(tmp_path, capsys):
    out_dir = tmp_path / "sim"
    assert main(
        ["simulate", "--preset", "set1", "--seed", "42", "--out", str(out_dir)]
    ) == 0
    config = load_config(_preset_path("set1"))
    bundle = generate_bundle(config.params, 32, 42, 0)
    rows = list(csv.DictReader(open(out_dir / "trajectory.csv")))
    assert len(rows) == 32 + bundle.jump_times.size + 1


def test_simulate_mesh_only(tmp_path):
    config = _write_config(tmp_path)
    out_dir = tmp_path / "mesh"
    assert main(
        ["simulate", "--config", str(config), "--out", str(out_dir), "--mesh-only"]
    ) == 0
    rows = list(csv.DictReader(open(out_dir / "mesh.csv")))
    assert set(rows[0].keys()) == {"t", "is_jump"}


def test_convergence_writes_reports(tmp_path, capsys):
    config = _write_config(tmp_path, n_paths=30)
    out_dir = tmp_path / "conv"
    assert main(["convergence", "--config", str(config), "--out", str(out_dir)]) == 0
    out = capsys.readouterr().out
    assert "tjabem: slope=" in out
    payload = json.loads((out_dir / "convergence.json").read_text())
    assert payload["config"]["global_seed"] == 11
    assert payload["config"]["model"]["gamma"] == 3.0
    assert "parallelism" not in payload["config"]
    assert "tjabem" in payload["schemes"]
    rows = list(csv.DictReader(open(out_dir / "convergence.csv")))
    assert len(rows) == 2
    plot_rows = list(csv.DictReader(open(out_dir / "plotdata_tjabem.csv")))
    assert set(plot_rows[0].keys()) == {"log2_dt", "log2_error", "log2_ref"}
    # reference line is anchored at the coarsest point with slope one
    first = plot_rows[0]
    assert float(first["log2_ref"]) == pytest.approx(float(first["log2_error"]))


def test_convergence_both_schemes(tmp_path, capsys):
    config = _write_config(tmp_path, scheme="both", n_paths=20, m_ref=64)
    out_dir = tmp_path / "both"
    assert main(["convergence", "--config", str(config), "--out", str(out_dir)]) == 0
    payload = json.loads((out_dir / "convergence.json").read_text())
    assert set(payload["schemes"]) == {"tjabem", "bem"}
    assert (out_dir / "plotdata_bem.csv").exists()


def test_env_seed_overrides_config(tmp_path, monkeypatch):
    config = _write_config(tmp_path, n_paths=10, m_ref=64)
    out_dir = tmp_path / "env"
    monkeypatch.setenv("JUMPSDE_SEED", "777")
    assert main(["convergence", "--config", str(config), "--out", str(out_dir)]) == 0
    payload = json.loads((out_dir / "convergence.json").read_text())
    assert payload["config"]["global_seed"] == 777


def test_positivity_cli(tmp_path, capsys):
    config_a = _write_config(tmp_path, name="a.cfg", m_list="4, 8, 16", n_paths=10)
    config_b = _write_config(tmp_path, name="b.cfg", m_list="4, 8, 16", n_paths=10)
    out_dir = tmp_path / "pos"
    assert main(
        [
            "positivity",
            "--presets", f"{config_a},{config_b}",
            "--out", str(out_dir),
        ]
    ) == 0
    rows = list(csv.DictReader(open(out_dir / "positivity.csv")))
    # 2 sets x 3 jump families x 3 step sizes
    assert len(rows) == 18
    assert all(row["percent"] == "0.0" for row in rows)
    assert {row["h_family"] for row in rows} == {"linear:-0.5", "linear:0.5", "sine:1"}


def test_moments_cli(tmp_path, capsys):
    config = _write_config(tmp_path, n_paths=20)
    out_dir = tmp_path / "mom"
    assert main(
        [
            "moments",
            "--config", str(config),
            "--out", str(out_dir),
            "--p-list", "0,2",
        ]
    ) == 0
    rows = list(csv.DictReader(open(out_dir / "moments.csv")))
    assert len(rows) == 2
    assert float(rows[0]["sup_moment"]) == 1.0


def test_fast_flag_halves_ladder(tmp_path):
    config = _write_config(tmp_path, m_list="8, 16, 32, 64", m_ref=128)
    from jumpsde.cli import _resolve
    import argparse

    args = argparse.Namespace(
        config=str(config), preset=None, h=None, lam=None, scheme=None,
        seed=None, out=None, fast=True,
    )
    resolved = _resolve(args)
    assert resolved.m_list == (8, 16)
    assert resolved.n_paths == 1000


def test_unknown_preset_fails(capsys):
    assert main(["validate", "--preset", "set9"]) == 1
