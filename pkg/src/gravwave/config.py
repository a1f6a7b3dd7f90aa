"""
Flat "section.key = value" experiment configuration.

The format is line-oriented: blank lines and '#' comments are ignored,
every other line must read "section.key = value".  Unknown keys and
malformed values are rejected with diagnostics naming the offending
key, before any compute starts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def _parse_lines(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'section.key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if "." not in key:
            raise ConfigError(f"line {lineno}: key {key!r} must be qualified as section.key")
        out[key] = value
    return out


def _get(table, key, kind, default):
    if key not in table:
        return default
    raw = table.pop(key)
    try:
        if kind is bool:
            if raw.lower() in ("true", "yes", "1"):
                return True
            if raw.lower() in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if kind is tuple:
            return tuple(float(part) for part in raw.split(","))
        return kind(raw)
    except ValueError as e:
        raise ConfigError(f"config key {key!r}: cannot parse {raw!r} as {kind.__name__}") from e


@dataclass(frozen=True)
class ExperimentConfig:
    """Typed view of one experiment configuration file."""

    # grid
    n: int = 32
    R: float = 2.0 * math.pi
    # volume solver
    Y: float | None = None
    ny: int = 48
    tol: float = 1e-9
    max_iter: int = 40
    mode: str = "full"
    # evolution
    dt: float = 0.01
    scheme: str = "ifrk4"
    T: float = 1.0
    snapshot_every: int = 0
    log_every: int = 10
    norm_order: float = 11.0
    # data
    kind: str = "mode"
    epsilon: float = 0.01
    seed: int = 0
    width: float | None = None
    mode_k: tuple = (1.0, 0.0)
    # experiment sweeps
    epsilons: tuple = (0.02, 0.01, 0.005)
    T_list: tuple = (10.0, 100.0, 1000.0)
    k_band: int | None = None
    t_max: float | None = None
    samples: int = 48
    T_max: float | None = None  # lifespan censoring horizon, default 50 R

    def __post_init__(self) -> None:
        if self.n < 8 or self.n & (self.n - 1):
            raise ConfigError(f"config key 'grid.n': {self.n} is not a power of two >= 8")
        for key, value in (
            ("grid.R", self.R),
            ("dtn.tol", self.tol),
            ("evolution.dt", self.dt),
            ("evolution.T", self.T),
        ):
            if not value > 0:
                raise ConfigError(f"config key {key!r}: must be positive, got {value}")
        if self.Y is not None and not self.Y > 0:
            raise ConfigError(f"config key 'dtn.Y': must be positive, got {self.Y}")
        if self.ny < 4:
            raise ConfigError(f"config key 'dtn.ny': needs at least 4 levels, got {self.ny}")
        if self.mode not in ("full", "series2"):
            raise ConfigError(f"config key 'dtn.mode': must be 'full' or 'series2', got {self.mode!r}")
        if self.scheme not in ("rk4", "ifrk4"):
            raise ConfigError(f"config key 'evolution.scheme': must be 'rk4' or 'ifrk4', got {self.scheme!r}")
        if self.kind not in ("gaussian", "mode", "two_bump"):
            raise ConfigError(f"config key 'data.kind': unknown kind {self.kind!r}")
        if not 0.0 <= self.epsilon <= 0.1:
            raise ConfigError(
                f"config key 'data.epsilon': {self.epsilon} outside the smallness regime [0, 0.1]"
            )
        if any(not 0.0 <= e <= 0.1 for e in self.epsilons):
            raise ConfigError("config key 'experiment.epsilons': entries must lie in [0, 0.1]")

    def dtn_params(self):
        from .dtn import DtnParams

        return DtnParams(Y=self.Y, ny=self.ny, tol=self.tol, max_iter=self.max_iter, mode=self.mode)

    def grid(self):
        from .grid import Grid

        return Grid(self.n, self.R)


def parse_config(text: str) -> ExperimentConfig:
    """Parse configuration text; see module docstring for the format."""
    table = _parse_lines(text)
    kw = dict(
        n=_get(table, "grid.n", int, 32),
        R=_get(table, "grid.R", float, 2.0 * math.pi),
        Y=_get(table, "dtn.Y", float, None),
        ny=_get(table, "dtn.ny", int, 48),
        tol=_get(table, "dtn.tol", float, 1e-9),
        max_iter=_get(table, "dtn.max_iter", int, 40),
        mode=_get(table, "dtn.mode", str, "full"),
        dt=_get(table, "evolution.dt", float, 0.01),
        scheme=_get(table, "evolution.scheme", str, "ifrk4"),
        T=_get(table, "evolution.T", float, 1.0),
        snapshot_every=_get(table, "evolution.snapshot_every", int, 0),
        log_every=_get(table, "evolution.log_every", int, 10),
        norm_order=_get(table, "evolution.norm_order", float, 11.0),
        kind=_get(table, "data.kind", str, "mode"),
        epsilon=_get(table, "data.epsilon", float, 0.01),
        seed=_get(table, "data.seed", int, 0),
        width=_get(table, "data.width", float, None),
        mode_k=_get(table, "data.mode_k", tuple, (1.0, 0.0)),
        epsilons=_get(table, "experiment.epsilons", tuple, (0.02, 0.01, 0.005)),
        T_list=_get(table, "experiment.T_list", tuple, (10.0, 100.0, 1000.0)),
        k_band=_get(table, "experiment.k_band", int, None),
        t_max=_get(table, "experiment.t_max", float, None),
        samples=_get(table, "experiment.samples", int, 48),
        T_max=_get(table, "experiment.T_max", float, None),
    )
    if table:
        stray = ", ".join(sorted(table))
        raise ConfigError(f"unknown config key(s): {stray}")
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
