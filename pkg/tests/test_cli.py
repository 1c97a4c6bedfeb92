"""Tests for CSV import/export, configs, draws, and the CLI front end."""

import os
from pathlib import Path

import numpy as np
import pytest

from accwave import dataio
from accwave.cli import main
from accwave.dataio import (
    ParamSample,
    ScenarioConfig,
    config_from_dict,
    ingest_trajectories,
    load_config,
    load_draws,
    sample_params,
    save_config,
    write_trajectories,
)
from accwave.microsim import Cruise, LeaderProfile, Scenario, simulate_platoon
from accwave.model import ControlParams

DATA_DIR = Path(__file__).resolve().parent.parent / "data"


def _small_run(duration=2.0):
    sc = Scenario(
        params=ControlParams(),
        n_followers=2,
        leader=LeaderProfile(v0=10.0, phases=(Cruise(None),)),
        duration=duration,
        dt=0.1,
        initial_speeds=10.0,
    )
    return simulate_platoon(sc).trajectories


# ---------------------------------------------------------------------------
# trajectory files
# ---------------------------------------------------------------------------


def test_trajectory_round_trip_full_precision(tmp_path):
    trajs = _small_run()
    path = tmp_path / "t.csv"
    write_trajectories(str(path), trajs, full_precision=True)
    back = ingest_trajectories(str(path))
    assert [tr.vehicle_id for tr in back] == [tr.vehicle_id for tr in trajs]
    for a, b in zip(trajs, back):
        assert np.array_equal(a.t, b.t)
        assert np.array_equal(a.x, b.x)
        assert np.array_equal(a.v, b.v)
        assert np.array_equal(a.a, b.a)


def test_ingest_accepts_shuffled_rows(tmp_path):
    trajs = _small_run()
    path = tmp_path / "t.csv"
    write_trajectories(str(path), trajs, full_precision=True)
    lines = path.read_text().splitlines()
    header, rows = lines[0], lines[1:]
    rng = np.random.default_rng(5)
    rng.shuffle(rows)
    path.write_text("\n".join([header] + rows) + "\n")
    back = ingest_trajectories(str(path))
    for a, b in zip(trajs, back):
        assert np.array_equal(a.t, b.t)
        assert np.array_equal(a.x, b.x)


def test_ingest_reports_nonuniform_sampling_row(tmp_path):
    path = tmp_path / "bad.csv"
    # vehicle 0 skips the t=0.2 sample: the offending data row is named
    path.write_text(
        "t,vehicle_id,x,v,a\n"
        "0.0,0,0.0,10.0,0.0\n"
        "0.1,0,1.0,10.0,0.0\n"
        "0.3,0,3.0,10.0,0.0\n"
        "0.4,0,4.0,10.0,0.0\n"
    )
    with pytest.raises(ValueError, match="not uniformly sampled near data row 4"):
        ingest_trajectories(str(path))


def test_ingest_reconstructs_missing_accel_column(tmp_path):
    path = tmp_path / "noa.csv"
    path.write_text(
        "t,vehicle_id,x,v\n"
        "0.0,0,0.0,10.0\n"
        "0.5,0,5.0,11.0\n"
        "1.0,0,10.5,12.0\n"
    )
    (tr,) = ingest_trajectories(str(path))
    assert tr.a == pytest.approx([2.0, 2.0, 2.0])


def test_ingest_rejects_wrong_header(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("time,id,pos,speed\n0,0,0,1\n")
    with pytest.raises(ValueError, match="expected header"):
        ingest_trajectories(str(path))


# ---------------------------------------------------------------------------
# draws
# ---------------------------------------------------------------------------


def test_load_draws_and_seeded_sampling(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("tau,L,k_s,k_v\n1.0,9.0,0.3,0.5\n1.1,9.5,0.25,0.55\n0.9,8.5,0.28,0.6\n")
    draws = load_draws(str(path))
    assert len(draws) == 3
    assert draws[0] == ParamSample(1.0, 9.0, 0.3, 0.5)
    a = sample_params(draws, 10, seed=4)
    b = sample_params(draws, 10, seed=4)
    assert a == b
    assert any(x != y for x, y in zip(a, sample_params(draws, 10, seed=5)))


def test_sampling_from_single_draw_repeats_it(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("tau,L,k_s,k_v\n1.0,9.0,0.3,0.5\n")
    draws = load_draws(str(path))
    assert sample_params(draws, 5, seed=0) == [draws[0]] * 5


def test_draw_validation(tmp_path):
    with pytest.raises(ValueError):
        ParamSample(1.0, -9.0, 0.3, 0.5)
    path = tmp_path / "d.csv"
    path.write_text("tau,L\n1.0,9.0\n")
    with pytest.raises(ValueError, match="expected header"):
        load_draws(str(path))
    with pytest.raises(ValueError):
        sample_params([], 5, seed=0)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def test_config_round_trip(tmp_path):
    cfg = ScenarioConfig(
        case=3, dt=0.02, modes=((20.0, 0.5, 0.0), (10.0, 1.0, 1.5)),
        draws_file="data/calibrated_draws.csv", seed=7,
    )
    path = tmp_path / "c.yaml"
    save_config(cfg, str(path))
    assert load_config(str(path)) == cfg


def test_unknown_config_key_rejected():
    with pytest.raises(ValueError, match="unknown config keys.*n_folowers"):
        config_from_dict({"n_folowers": 3})


def test_malformed_mode_rejected():
    with pytest.raises(ValueError, match="amplitude, omega, phase"):
        config_from_dict({"modes": [[1.0, 2.0]]})


def test_example_config_loads():
    path = Path(__file__).resolve().parent.parent / "configs" / "example.yaml"
    cfg = load_config(str(path))
    assert cfg.n_draws == 200


def test_default_out_dir_env(monkeypatch):
    monkeypatch.delenv("ACCWAVE_OUT_DIR", raising=False)
    assert dataio.default_out_dir() == "out"
    monkeypatch.setenv("ACCWAVE_OUT_DIR", "/tmp/xyz")
    assert dataio.default_out_dir() == "/tmp/xyz"


# ---------------------------------------------------------------------------
# CLI end to end
# ---------------------------------------------------------------------------


def test_cli_simulate_without_modes_keeps_constant_spacing(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("duration: 5.0\nn_followers: 2\nmodes: []\n")
    rc = main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path),
               "--full-precision"])
    assert rc == 0
    trajs = ingest_trajectories(str(tmp_path / "trajectories.csv"))
    assert len(trajs) == 3
    # steady leader at v_e: every pair holds the equilibrium spacing 17 m
    for lead, fol in zip(trajs, trajs[1:]):
        assert np.allclose(lead.x - fol.x, 17.0, atol=1e-9)


def test_cli_case_pipeline_writes_all_outputs(tmp_path, capsys):
    rc = main(["case", "1", "--out-dir", str(tmp_path)])
    assert rc == 0
    for name in (
        "case1_trajectories.csv", "case1_paths_proposed.csv", "case1_paths_baseline.csv",
        "case1_stats.csv", "case1_hist_proposed.csv", "case1_hist_baseline.csv",
    ):
        assert (tmp_path / name).exists(), name
    lines = (tmp_path / "case1_stats.csv").read_text().splitlines()
    assert lines[0] == "case,method,mean,median,q1,q3,max,min"
    assert lines[1].startswith("case1,proposed,")
    assert lines[2].startswith("case1,baseline,")
    assert "case1: proposed mean" in capsys.readouterr().out


def test_cli_outputs_byte_identical_across_runs(tmp_path):
    dir_a, dir_b = tmp_path / "a", tmp_path / "b"
    assert main(["case", "1", "--out-dir", str(dir_a)]) == 0
    assert main(["case", "1", "--out-dir", str(dir_b)]) == 0
    for name in ("case1_trajectories.csv", "case1_stats.csv", "case1_paths_proposed.csv"):
        assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes(), name


def test_cli_metrics_on_exported_trajectories(tmp_path):
    assert main(["case", "1", "--out-dir", str(tmp_path)]) == 0
    rc = main([
        "metrics", "--input", str(tmp_path / "case1_trajectories.csv"),
        "--out-dir", str(tmp_path), "--warmup", "37.5", "--end-margin", "8.0",
    ])
    assert rc == 0
    stats = (tmp_path / "stats.csv").read_text().splitlines()
    assert stats[1].startswith("custom,proposed,")


def test_cli_wave_reports_stability(tmp_path, capsys):
    rc = main(["wave", "--out-dir", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "string stability: Stable" in out
    assert (tmp_path / "bode.csv").exists()


def test_cli_fft_round_trip(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(
        "duration: 25.0\nn_followers: 2\n"
        "modes:\n  - [20.0, 0.5026548245743669, 0.0]\n"
    )
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path),
                 "--full-precision"]) == 0
    rc = main(["fft", "--input", str(tmp_path / "trajectories.csv"),
               "--vehicle", "0", "--modes", "1", "--out-dir", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "v_e = 10" in out
    assert (tmp_path / "modes.csv").exists()


def test_cli_empirical_smoke(tmp_path, capsys):
    rc = main([
        "empirical",
        "--draws", str(DATA_DIR / "calibrated_draws.csv"),
        "--leader", str(DATA_DIR / "leader_dip.csv"),
        "--n-draws", "3", "--seed", "0", "--out-dir", str(tmp_path),
    ])
    assert rc == 0
    out = capsys.readouterr().out
    assert "3 draws" in out
    assert (tmp_path / "empirical_stats.csv").exists()


def test_cli_bad_config_key_exits_nonzero(tmp_path, capsys):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("no_such_key: 1\n")
    rc = main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path)])
    assert rc == 2
    assert "unknown config keys" in capsys.readouterr().err
