"""
Experiment drivers shared by the command-line front end: initial data
construction, trajectory runs with norm logging and snapshots, remainder
order sweeps for the Dirichlet-to-Neumann expansion, and lifespan
measurements against the norm-doubling time.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dtn, zakharov
from .config import ExperimentConfig
from .grid import (
    Grid,
    RealField,
    holder_norm,
    l2_norm,
    sobolev_norm,
    transform,
    write_field,
    z_norm,
)
from .zakharov import DtnCache, SurfaceState, TrajectoryLog

_M64 = (1 << 64) - 1


def derive_seed(base: int, index: int) -> int:
    """Per-trajectory seed: the (index+1)-th output of a splitmix stream.

    The stream constants are the standard 64-bit splitmix mixing
    multipliers, so nearby base seeds and indices decorrelate fully.
    """
    x = base & _M64
    out = 0
    for _ in range(index + 1):
        x = (x + 0x9E3779B97F4A7C15) & _M64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
        out = z ^ (z >> 31)
    return out


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

def _bump(grid: Grid, center, width: float) -> np.ndarray:
    """Periodized Gaussian bump of the given width at ``center``."""
    x1, x2 = grid.coords()
    d1 = np.remainder(x1 - center[0] + grid.R / 2, grid.R) - grid.R / 2
    d2 = np.remainder(x2 - center[1] + grid.R / 2, grid.R) - grid.R / 2
    return np.exp(-(d1**2 + d2**2) / (2.0 * width**2))


def initial_state(cfg: ExperimentConfig, seed: int | None = None) -> SurfaceState:
    """Build the configured initial surface state at t = 0.

    kind "mode" is a single traveling lattice mode; "gaussian" is one
    localized bump at rest; "two_bump" is a pair of opposite-sign bumps.
    The seed perturbs the bump placement so distinct trajectories in a
    sweep decorrelate; it never changes the amplitude scale.
    """
    grid = cfg.grid()
    eps = cfg.epsilon
    if seed is None:
        seed = cfg.seed
    if cfg.kind == "mode":
        m1, m2 = cfg.mode_k
        k1 = 2.0 * np.pi * m1 / cfg.R
        k2 = 2.0 * np.pi * m2 / cfg.R
        kk = float(np.hypot(k1, k2))
        if kk == 0.0:
            raise ValueError("data.mode_k must be a nonzero lattice mode")
        x1, x2 = grid.coords()
        phase = k1 * x1 + k2 * x2
        h = eps * np.cos(phase)
        phi = (eps / np.sqrt(kk)) * np.sin(phase)
    else:
        rng = np.random.default_rng(seed)
        width = cfg.width if cfg.width is not None else cfg.R / 8.0
        center = cfg.R * rng.random(2)
        h = eps * _bump(grid, center, width)
        if cfg.kind == "two_bump":
            shift = (center[0] + cfg.R / 2, center[1] + cfg.R / 2)
            h = h - eps * _bump(grid, shift, width)
        # start the bump with a gentle flow: a displaced potential bump
        # of the same scale, so the boundary operator sees nonzero data
        phi = 0.6 * eps * _bump(grid, (center[0] + cfg.R / 3, center[1] + cfg.R / 5), width)
        phi = phi - phi.mean()
    h = h - h.mean()
    return SurfaceState(grid, 0.0, RealField(grid, h), RealField(grid, phi))


# ---------------------------------------------------------------------------
# trajectory runs
# ---------------------------------------------------------------------------

def diagnostics_row(state: SurfaceState, params: dtn.DtnParams, norm_order: float) -> dict:
    """One trajectory-log row of conserved and norm diagnostics."""
    px, py = zakharov.momentum(state)
    return {
        "t": state.t,
        "energy": zakharov.energy(state, params),
        "hN": sobolev_norm(transform(state.h), norm_order),
        "c6": holder_norm(state.h, 6.0),
        "z": z_norm(state.h),
        "sup_h": float(np.abs(state.h.samples).max()),
        "min_a": float(zakharov.taylor_coefficient(state, params).samples.min()),
        "px": px,
        "py": py,
    }


def run_trajectory(
    cfg: ExperimentConfig,
    out_dir: Path | None = None,
    seed: int | None = None,
) -> tuple[TrajectoryLog, SurfaceState]:
    """Evolve the configured data to time T, logging at the set cadence.

    Snapshots of h and phi are written beside the log when out_dir is
    given and evolution.snapshot_every is positive.
    """
    params = cfg.dtn_params()
    state = initial_state(cfg, seed)
    cache = DtnCache()
    log = TrajectoryLog()
    log.append(diagnostics_row(state, params, cfg.norm_order))
    steps = max(int(round(cfg.T / cfg.dt)), 1)
    dt = cfg.T / steps
    for i in range(1, steps + 1):
        state = zakharov.step(state, dt, cfg.scheme, params, cache)
        if i % max(cfg.log_every, 1) == 0 or i == steps:
            log.append(diagnostics_row(state, params, cfg.norm_order))
        if out_dir is not None and cfg.snapshot_every > 0 and i % cfg.snapshot_every == 0:
            write_field(Path(out_dir) / f"h_{i:06d}.gwf", state.h)
            write_field(Path(out_dir) / f"phi_{i:06d}.gwf", state.phi)
    return log, state


# ---------------------------------------------------------------------------
# expansion-order sweep
# ---------------------------------------------------------------------------

def expansion_residuals(cfg: ExperimentConfig) -> tuple[list, np.ndarray]:
    """Residuals of the boundary-operator expansion across amplitudes.

    For each amplitude in the configured sweep, the converged operator
    G(h)phi is compared in L^2 with the truncated expansions of orders
    0, 1 and 2 on the same data; rows are (r0, r1, r2).
    """
    rows = []
    params = cfg.dtn_params()
    eps = cfg.epsilons
    for i, e in enumerate(eps):
        cfge = dataclasses.replace(cfg, epsilon=float(e))
        st = initial_state(cfge, derive_seed(cfg.seed, i))
        full = dtn.dtn_full(st.h, st.phi, params).G
        grid = st.grid
        row = []
        for order in range(3):
            approx = dtn.dtn_series(st.h, st.phi, order)
            row.append(l2_norm(grid, full.samples - approx.samples))
        rows.append(row)
    return list(eps), np.asarray(rows)


def residual_slopes(eps, residuals: np.ndarray) -> np.ndarray:
    """Log-log slopes of each residual column against the amplitude."""
    le = np.log(np.asarray(eps, dtype=float))
    return np.array(
        [np.polyfit(le, np.log(residuals[:, j]), 1)[0] for j in range(residuals.shape[1])]
    )


# ---------------------------------------------------------------------------
# lifespan sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LifespanRecord:
    """Outcome of one lifespan trajectory.

    T_double is the first time the evolution norm reaches twice its
    initial value, censored at the horizon when the run stays below it.
    blowup marks trajectories that left the resolvable regime before
    doubling.
    """

    epsilon: float
    R: float
    T_double: float
    blowup: bool
    seed: int
    censored: bool


def _norm_u(state: SurfaceState, order: float) -> float:
    return sobolev_norm(zakharov.complex_variable(state), order)


def lifespan_one(cfg: ExperimentConfig, epsilon: float, seed: int) -> LifespanRecord:
    """Run one trajectory until norm doubling, blow-up, or the horizon."""
    cfge = dataclasses.replace(cfg, epsilon=float(epsilon))
    params = cfge.dtn_params()
    state = initial_state(cfge, seed)
    cache = DtnCache()
    base = _norm_u(state, cfg.norm_order)
    horizon = cfg.T_max if cfg.T_max is not None else 50.0 * cfg.R
    t = 0.0
    try:
        while t < horizon:
            state = zakharov.step(state, cfg.dt, cfg.scheme, params, cache)
            t = state.t
            if base > 0.0 and _norm_u(state, cfg.norm_order) >= 2.0 * base:
                return LifespanRecord(epsilon, cfg.R, t, False, seed, False)
    except zakharov.BlowUpError as e:
        return LifespanRecord(epsilon, cfg.R, e.state.t, True, seed, False)
    return LifespanRecord(epsilon, cfg.R, horizon, False, seed, True)


def lifespan_sweep(cfg: ExperimentConfig, workers: int = 1) -> list[LifespanRecord]:
    """Lifespan records over the configured amplitude list."""
    seeds = [derive_seed(cfg.seed, i) for i in range(len(cfg.epsilons))]
    if workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lifespan_one, [cfg] * len(seeds), cfg.epsilons, seeds))
    return [lifespan_one(cfg, e, s) for e, s in zip(cfg.epsilons, seeds)]


def lifespan_slope(records) -> float:
    """Log-log slope of the doubling time against the amplitude."""
    eps = np.array([r.epsilon for r in records])
    td = np.array([r.T_double for r in records])
    return float(np.polyfit(np.log(eps), np.log(td), 1)[0])
