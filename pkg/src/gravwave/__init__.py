"""
Pseudo-spectral laboratory for gravity water waves on a 2-D torus.

The package evolves the surface elevation / boundary potential pair of
deep-water gravity waves with a convergent volume solver for the
Dirichlet-to-Neumann operator, and measures the structures that control
long-time behavior: paradifferential decompositions, quadratic normal
forms, dispersive decay, and lifespan against norm doubling.
"""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .dtn import DtnConvergenceError, DtnParams, DtnResult, dtn_full, dtn_series
from .experiments import LifespanRecord, initial_state, lifespan_sweep, run_trajectory
from .grid import Grid, GridError, RealField, SpectralField, inverse, make_grid, transform
from .normalform import ResidualReport, boundary_sum, n2_total, residual_order
from .zakharov import BlowUpError, DtnCache, SurfaceState, TrajectoryLog, energy, step

__all__ = [
    "BlowUpError",
    "ConfigError",
    "DtnCache",
    "DtnConvergenceError",
    "DtnParams",
    "DtnResult",
    "ExperimentConfig",
    "Grid",
    "GridError",
    "LifespanRecord",
    "RealField",
    "ResidualReport",
    "SpectralField",
    "SurfaceState",
    "TrajectoryLog",
    "boundary_sum",
    "dtn_full",
    "dtn_series",
    "energy",
    "initial_state",
    "inverse",
    "lifespan_sweep",
    "load_config",
    "make_grid",
    "n2_total",
    "parse_config",
    "residual_order",
    "run_trajectory",
    "step",
    "transform",
]

__version__ = "0.1.0"
