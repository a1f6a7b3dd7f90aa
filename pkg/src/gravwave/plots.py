"""
Figure rendering for the command-line reports.

Every writer takes the already-computed report data and a target path,
renders with the non-interactive Agg backend, and returns the path, so
figures always land beside the delimited output they illustrate.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return Path(path)


def trajectory_figure(log, path) -> Path:
    """Energy drift and norm histories of one trajectory."""
    t = np.asarray(log.times)
    cols = {k: np.asarray([row[k] for row in log.rows]) for k in log.COLUMNS}
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax1.plot(t, cols["energy"] - cols["energy"][0], lw=1.2)
    ax1.set_xlabel("t")
    ax1.set_ylabel("energy drift")
    for key in ("hN", "c6", "z", "sup_h"):
        positive = cols[key] > 0
        if positive.any():
            ax2.semilogy(t[positive], cols[key][positive], lw=1.2, label=key)
    ax2.plot(t, cols["min_a"], "k--", lw=1.0, label="min_a")
    ax2.set_xlabel("t")
    ax2.legend(fontsize=8)
    return _finish(fig, path)


def expansion_figure(eps, residuals, slopes, path) -> Path:
    """Expansion residuals against amplitude, one line per order."""
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    for j in range(residuals.shape[1]):
        ax.loglog(eps, residuals[:, j], "o-", label=f"order {j} (slope {slopes[j]:.2f})")
    ax.set_xlabel("amplitude")
    ax.set_ylabel("residual")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def decay_figure(curve, R, corrected, path) -> Path:
    """Sup-norm decay and its wrap-corrected flattening."""
    t = np.asarray(curve.times)
    v = np.asarray(curve.values)
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax1.loglog(1.0 + t, v, "o-", ms=3, lw=1.0)
    lo, hi = curve.fit_window
    ref = v[np.searchsorted(t, lo)] * ((1.0 + t) / (1.0 + lo)) ** curve.fitted_slope
    sel = (t >= lo) & (t <= hi)
    ax1.loglog(1.0 + t[sel], ref[sel], "k--", lw=1.0, label=f"slope {curve.fitted_slope:.3f}")
    ax1.set_xlabel("1 + t")
    ax1.set_ylabel("sup norm")
    ax1.legend(fontsize=8)
    ax2.semilogx(1.0 + t, corrected, "o-", ms=3, lw=1.0)
    ax2.set_xlabel("1 + t")
    ax2.set_ylabel("value (1+t) / (t/R+1)^2")
    return _finish(fig, path)


def strichartz_figure(Ts, norms, ratios, path) -> Path:
    """Accumulated norm and its ratio to the logarithmic bound."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    ax1.loglog(Ts, norms, "o-")
    ax1.set_xlabel("T")
    ax1.set_ylabel("accumulated norm")
    ax2.semilogx(Ts, ratios, "o-")
    ax2.set_xlabel("T")
    ax2.set_ylabel("norm / bound")
    return _finish(fig, path)


def normalform_figure(report, path) -> Path:
    """Duhamel increment and residual against amplitude."""
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    ax.loglog(report.epsilons, report.duhamel, "o-",
              label=f"increment (slope {report.duhamel_slope:.2f})")
    ax.loglog(report.epsilons, report.residual, "s-",
              label=f"residual (slope {report.residual_slope:.2f})")
    ax.set_xlabel("amplitude")
    ax.set_ylabel("L2 size at time T")
    ax.legend(fontsize=8)
    return _finish(fig, path)


def lifespan_figure(records, slope, path) -> Path:
    """Doubling time against amplitude; censored runs marked open."""
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    eps = [r.epsilon for r in records]
    td = [r.T_double for r in records]
    full = [not r.censored for r in records]
    ax.loglog(eps, td, "k-", lw=0.8)
    for e, t, f in zip(eps, td, full):
        ax.loglog([e], [t], "o", mfc=("C0" if f else "none"), mec="C0")
    ax.set_xlabel("amplitude")
    ax.set_ylabel("doubling time")
    ax.set_title(f"slope {slope:.2f}", fontsize=9)
    return _finish(fig, path)
