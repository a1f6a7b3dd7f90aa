"""Experiment drivers: data construction, trajectory logging, lifespan sweep."""

import dataclasses

import numpy as np
import pytest

from gravwave.config import parse_config
from gravwave.experiments import (
    LifespanRecord,
    derive_seed,
    expansion_residuals,
    initial_state,
    lifespan_one,
    lifespan_sweep,
    residual_slopes,
    run_trajectory,
)


def test_seed_derivation_is_deterministic_and_distinct():
    a = derive_seed(42, 0)
    assert a == derive_seed(42, 0)
    seeds = {derive_seed(42, i) for i in range(100)}
    assert len(seeds) == 100
    assert all(0 <= s < 2**64 for s in seeds)
    assert derive_seed(43, 0) != derive_seed(42, 0)


def test_mode_data_properties():
    cfg = parse_config("data.kind = mode\ndata.epsilon = 0.02\ndata.mode_k = 2,1")
    st = initial_state(cfg)
    assert abs(st.h.samples.mean()) < 1e-14
    assert abs(np.abs(st.h.samples).max() - 0.02) < 1e-10
    assert np.abs(st.phi.samples).max() > 0


def test_bump_data_depends_on_seed():
    cfg = parse_config("data.kind = gaussian\ndata.epsilon = 0.05")
    a = initial_state(cfg, seed=1)
    b = initial_state(cfg, seed=2)
    assert np.abs(a.h.samples - b.h.samples).max() > 1e-4
    assert np.array_equal(a.h.samples, initial_state(cfg, seed=1).h.samples)


def test_two_bump_data_is_balanced():
    cfg = parse_config("data.kind = two_bump\ndata.epsilon = 0.05")
    st = initial_state(cfg, seed=3)
    assert st.h.samples.max() > 1e-3
    assert st.h.samples.min() < -1e-3
    assert abs(st.h.samples.mean()) < 1e-14


def test_run_trajectory_logs_and_snapshots(tmp_path):
    cfg = parse_config(
        "grid.n = 32\ndtn.ny = 24\nevolution.dt = 0.02\nevolution.T = 0.1\n"
        "evolution.log_every = 2\nevolution.snapshot_every = 5\n"
        "data.kind = mode\ndata.epsilon = 0.01"
    )
    log, final = run_trajectory(cfg, out_dir=tmp_path)
    assert final.t == pytest.approx(0.1)
    assert log.times[0] == 0.0
    assert log.times[-1] == pytest.approx(0.1)
    assert (tmp_path / "h_000005.gwf").exists()
    assert (tmp_path / "phi_000005.gwf").exists()
    for row in log.rows:
        assert set(row) == set(log.COLUMNS)
        assert row["min_a"] > 0.5


def test_expansion_residuals_shrink_with_epsilon():
    cfg = parse_config(
        "grid.n = 32\ndtn.ny = 96\ndata.kind = gaussian\n"
        "experiment.epsilons = 0.04, 0.02, 0.01"
    )
    eps, res = expansion_residuals(cfg)
    assert res.shape == (3, 3)
    assert np.all(np.diff(res[:, 0]) < 0)  # residuals fall with amplitude
    slopes = residual_slopes(eps, res)
    assert slopes[0] > 1.5  # order-0 residual is at least quadratic


def test_lifespan_record_and_sweep():
    cfg = parse_config(
        "grid.n = 32\ndtn.mode = series2\nevolution.dt = 0.05\n"
        "data.kind = mode\ndata.mode_k = 1,1\n"
        "experiment.epsilons = 0.04, 0.02\nexperiment.T_max = 5"
    )
    rec = lifespan_one(cfg, 0.04, derive_seed(cfg.seed, 0))
    assert isinstance(rec, LifespanRecord)
    assert 0.0 < rec.T_double <= 5.0
    records = lifespan_sweep(cfg)
    assert len(records) == 2
    # smaller data survives at least as long
    assert records[1].T_double >= records[0].T_double


def test_zero_amplitude_is_censored():
    cfg = parse_config(
        "grid.n = 32\ndtn.mode = series2\nevolution.dt = 0.05\n"
        "data.kind = mode\nexperiment.T_max = 0.5\ndata.epsilon = 0"
    )
    rec = lifespan_one(cfg, 0.0, 0)
    assert rec.censored and not rec.blowup
    assert rec.T_double == pytest.approx(0.5)
