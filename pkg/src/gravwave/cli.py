"""
Command-line front end.

Each subcommand reads one flat configuration file, runs the matching
experiment, and writes delimited output plus a rendered figure into the
output directory.  Exit status 0 means success, 2 means the trajectory
left the resolvable regime (blow-up), 3 means the volume solver failed
to converge; configuration mistakes are reported with the offending key
and exit status 1.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import dispersion, experiments, normalform, plots, zakharov
from .config import ConfigError, ExperimentConfig, load_config
from .dtn import DtnConvergenceError
from .grid import GridError

EXIT_OK = 0
EXIT_BLOWUP = 2
EXIT_NO_CONVERGENCE = 3


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path: Path, comments: list, columns, rows) -> Path:
    """Delimited output: '#' header comments, column row, 17-digit data."""
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def _workers() -> int:
    raw = os.environ.get("GRAVWAVE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"GRAVWAVE_THREADS: cannot parse {raw!r} as int") from None


def _header(cfg: ExperimentConfig, seeds) -> list:
    out = [
        f"grid n={cfg.n} R={_fmt(cfg.R)}",
        f"data kind={cfg.kind} epsilon={_fmt(cfg.epsilon)}",
        f"seed = {cfg.seed}",
    ]
    for i, s in enumerate(seeds):
        out.append(f"trajectory_seed[{i}] = {s}")
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(cfg: ExperimentConfig, out: Path) -> int:
    seed = experiments.derive_seed(cfg.seed, 0)
    log, state = experiments.run_trajectory(cfg, out_dir=out, seed=seed)
    rows = [[row[k] for k in log.COLUMNS] for row in log.rows]
    csv = write_csv(out / "trajectory.csv", _header(cfg, [seed]), log.COLUMNS, rows)
    fig = plots.trajectory_figure(log, out / "trajectory.png")
    drift = abs(log.rows[-1]["energy"] - log.rows[0]["energy"])
    print(f"final t = {_fmt(state.t)}  energy drift = {drift:.3e}")
    print(f"wrote {csv} and {fig}")
    return EXIT_OK


def cmd_dtn_verify(cfg: ExperimentConfig, out: Path) -> int:
    eps, residuals = experiments.expansion_residuals(cfg)
    slopes = experiments.residual_slopes(eps, residuals)
    seeds = [experiments.derive_seed(cfg.seed, i) for i in range(len(eps))]
    rows = [[e, *r] for e, r in zip(eps, residuals)]
    csv = write_csv(out / "expansion.csv", _header(cfg, seeds),
                    ("epsilon", "r0", "r1", "r2"), rows)
    fig = plots.expansion_figure(np.asarray(eps), residuals, slopes, out / "expansion.png")
    print("residual slopes: " + "  ".join(f"order {j}: {s:.3f}" for j, s in enumerate(slopes)))
    print(f"wrote {csv} and {fig}")
    return EXIT_OK


def _decay_times(cfg: ExperimentConfig):
    t_max = cfg.t_max if cfg.t_max is not None else 10.0 * cfg.R
    body = np.geomspace(0.5, t_max, max(cfg.samples, 8))
    return np.concatenate(([0.0], body))


def cmd_decay(cfg: ExperimentConfig, out: Path) -> int:
    grid = cfg.grid()
    sigma = cfg.width if cfg.width is not None else 1.0
    u0 = dispersion.gaussian_data(grid, sigma=sigma)
    times = _decay_times(cfg)
    window = (5.0, float(times[-1])) if cfg.k_band is None else (10.0, float(times[-1]))
    curve = dispersion.decay_curve(u0, times, k=cfg.k_band, fit_window=window)
    rows = list(zip(curve.times, curve.values))
    comments = _header(cfg, []) + [
        f"k_band = {cfg.k_band if cfg.k_band is not None else 'full'}",
        f"fitted_slope = {_fmt(curve.fitted_slope)}",
    ]
    csv = write_csv(out / "decay.csv", comments, ("t", "value"), rows)
    corrected = dispersion.wrap_corrected_values(curve, cfg.R)
    fig = plots.decay_figure(curve, cfg.R, corrected, out / "decay.png")
    print(f"fitted decay slope over [{curve.fit_window[0]:g}, {curve.fit_window[1]:g}]: "
          f"{curve.fitted_slope:.4f}")
    print(f"wrote {csv} and {fig}")
    return EXIT_OK


def cmd_strichartz(cfg: ExperimentConfig, out: Path) -> int:
    grid = cfg.grid()
    sigma = cfg.width if cfg.width is not None else 1.0
    u0 = dispersion.gaussian_data(grid, sigma=sigma)
    rows = []
    for T in cfg.T_list:
        norm = dispersion.strichartz_norm(u0, T, dt=T / 256.0)
        bound = dispersion.strichartz_bound(u0, T)
        rows.append([T, norm, norm / bound])
    csv = write_csv(out / "strichartz.csv", _header(cfg, []),
                    ("T", "norm", "bound_ratio"), rows)
    Ts = [r[0] for r in rows]
    fig = plots.strichartz_figure(Ts, [r[1] for r in rows], [r[2] for r in rows],
                                  out / "strichartz.png")
    ratios = [r[2] for r in rows]
    print(f"bound ratios: min {min(ratios):.4f}  max {max(ratios):.4f}  "
          f"spread {max(ratios) / min(ratios):.4f}")
    print(f"wrote {csv} and {fig}")
    return EXIT_OK


def cmd_normalform(cfg: ExperimentConfig, out: Path) -> int:
    import dataclasses

    seeds = [experiments.derive_seed(cfg.seed, i) for i in range(len(cfg.epsilons))]
    seed_by_eps = dict(zip(cfg.epsilons, seeds))

    def data(e):
        return experiments.initial_state(
            dataclasses.replace(cfg, epsilon=float(e)), seed_by_eps[e]
        )

    report = normalform.residual_order(
        data, cfg.epsilons, cfg.T, cfg.dt, cfg.scheme, cfg.dtn_params()
    )
    rows = list(zip(report.epsilons, report.duhamel, report.residual))
    csv = write_csv(out / "normalform.csv", _header(cfg, seeds),
                    ("epsilon", "duhamel_norm", "residual_norm"), rows)
    fig = plots.normalform_figure(report, out / "normalform.png")
    print(f"duhamel slope = {report.duhamel_slope:.3f}  "
          f"residual slope = {report.residual_slope:.3f}")
    print(f"wrote {csv} and {fig}")
    return EXIT_OK


def cmd_lifespan(cfg: ExperimentConfig, out: Path) -> int:
    records = experiments.lifespan_sweep(cfg, workers=_workers())
    slope = experiments.lifespan_slope(records)
    seeds = [r.seed for r in records]
    rows = [[r.epsilon, r.R, r.T_double, r.blowup] for r in records]
    csv = write_csv(out / "lifespan.csv", _header(cfg, seeds),
                    ("epsilon", "R", "T_double", "blowup"), rows)
    fig = plots.lifespan_figure(records, slope, out / "lifespan.png")
    censored = sum(r.censored for r in records)
    print(f"lifespan slope = {slope:.3f}  ({censored} of {len(records)} censored)")
    print(f"wrote {csv} and {fig}")
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "dtn-verify": cmd_dtn_verify,
    "decay": cmd_decay,
    "strichartz": cmd_strichartz,
    "normalform": cmd_normalform,
    "lifespan": cmd_lifespan,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gravwave",
        description="Pseudo-spectral experiments for gravity water waves on a torus.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=fn.__doc__)
        p.add_argument("--config", required=True, help="experiment configuration file")
        p.add_argument("--out", default=".", help="output directory (default: current)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except FileNotFoundError:
        print(f"error: config file not found: {args.config}", file=sys.stderr)
        return 1
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](cfg, out)
    except zakharov.BlowUpError as e:
        if isinstance(e.__cause__, DtnConvergenceError):
            print(f"solver did not converge: {e}", file=sys.stderr)
            return EXIT_NO_CONVERGENCE
        print(f"blow-up: {e}", file=sys.stderr)
        return EXIT_BLOWUP
    except GridError as e:
        # the surface left the resolvable regime outside a time step
        print(f"blow-up: {e}", file=sys.stderr)
        return EXIT_BLOWUP
    except DtnConvergenceError as e:
        print(f"solver did not converge: {e}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
