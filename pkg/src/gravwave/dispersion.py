"""
Linear half-wave propagator experiments: dispersive decay rates, the
torus wrap-around correction, and Strichartz-norm growth.

On the plane, band-localized data under e^{-it|nabla|^{1/2}} decays in
sup-norm like (1+t)^{-1}.  On a torus of size R the wave wraps around
after a transit time ~R and refocuses, degrading the decay by a factor
(t/R+1)^2.  The accumulated L^2-in-time W^{6,infty} norm then grows
like sqrt(log(1+T)(1+T/R)) relative to the H^7 norm of the data.  All
three effects are measured here, not assumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import (
    Grid,
    GridError,
    SpectralField,
    backward,
    half_wave,
    lp_project,
)


def propagate_linear(F: SpectralField, t: float) -> SpectralField:
    """Evolve spectral data by the half-wave group e^{-it|nabla|^{1/2}}."""
    return half_wave(F, t)


def gaussian_data(grid: Grid, sigma: float = 1.0, centered: bool = True) -> SpectralField:
    """Gaussian bump g^hat(xi) = exp(-|xi|^2/(2 sigma^2)) on the grid shell.

    With centered=True the bump sits at the torus center, matching the
    spatially weighted diagnostics; the grid truncates the tail.
    """
    c = np.exp(-grid.kabs**2 / (2.0 * sigma**2)).astype(np.complex128)
    if centered:
        m = np.fft.fftfreq(grid.n, 1.0 / grid.n).astype(int)
        sign = (-1.0) ** (m[:, None] + m[None, :])
        c = c * sign
    return SpectralField(grid, c)


@dataclass(frozen=True)
class DecayCurve:
    """Sup-norm history of linearly propagated data.

    ``k`` is the dyadic band the values are localized to (None for the
    full field); ``fitted_slope`` is the log-log slope of value against
    1 + t over ``fit_window``.
    """

    times: tuple
    values: tuple
    k: int | None
    fitted_slope: float
    fit_window: tuple

    def __post_init__(self) -> None:
        t = np.asarray(self.times)
        v = np.asarray(self.values)
        if len(t) != len(v):
            raise GridError("times and values must have equal length")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise GridError("curve times must be strictly increasing")
        if np.any(v < 0):
            raise GridError("sup-norm values cannot be negative")


def _fit(times, values, window) -> float:
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    lo, hi = window
    sel = (t >= lo) & (t <= hi)
    if sel.sum() < 5:
        raise GridError(f"fit window [{lo:g}, {hi:g}] holds fewer than 5 samples")
    return float(np.polyfit(np.log1p(t[sel]), np.log(v[sel]), 1)[0])


def decay_curve(u0: SpectralField, times, k: int | None = None, fit_window=None) -> DecayCurve:
    """Sup-norms of the propagated field, optionally band-localized.

    The slope of log value against log(1+t) is fitted over fit_window
    (default: from t=5 to the last sample).
    """
    grid = u0.grid
    ts = tuple(float(t) for t in times)
    vals = []
    for t in ts:
        F = propagate_linear(u0, t)
        if k is not None:
            F = lp_project(F, k)
        vals.append(float(np.abs(backward(grid, F.coeffs)).max()))
    if fit_window is None:
        fit_window = (5.0, ts[-1])
    slope = _fit(ts, vals, fit_window)
    return DecayCurve(ts, tuple(vals), k, slope, tuple(fit_window))


def fit_decay(curve: DecayCurve, window) -> float:
    """Least-squares slope of log value vs log(1+t) over the window."""
    return _fit(curve.times, curve.values, window)


def wrap_corrected_values(curve: DecayCurve, R: float) -> np.ndarray:
    """values * (1+t) / (t/R+1)^2 for the wrap-around band check.

    Flat when the decay follows the planar (1+t)^{-1} law degraded by
    the torus refocusing factor.
    """
    t = np.asarray(curve.times, dtype=float)
    v = np.asarray(curve.values, dtype=float)
    return v * (1.0 + t) / (t / R + 1.0) ** 2


# ---------------------------------------------------------------------------
# Strichartz growth
# ---------------------------------------------------------------------------

def w6inf_norm(F: SpectralField) -> float:
    """W^{6,infty} norm: sum of sup-norms of all derivatives of order <= 6."""
    grid = F.grid
    ik1 = 1j * grid.k1[:, None]
    ik2 = 1j * grid.k1[None, :]
    total = 0.0
    for a in range(7):
        for b in range(7 - a):
            D = ik1**a * ik2**b * F.coeffs
            total += float(np.abs(backward(grid, D)).max())
    return total


def h_norm(F: SpectralField, s: float) -> float:
    """Sobolev norm of complex spectral data, sqrt(R^-2 sum <xi>^2s |c|^2)."""
    grid = F.grid
    w = (1.0 + grid.kabs**2) ** s
    return float(np.sqrt(np.sum(w * np.abs(F.coeffs) ** 2))) / grid.R


def strichartz_norm(u0: SpectralField, T: float, dt: float | None = None) -> float:
    """L^2-in-time W^{6,infty} norm of the propagated data over [0, T].

    Midpoint-rule quadrature of the squared norm; dt defaults to T/2048,
    far below the variation scale of the smooth integrand.
    """
    if dt is None:
        dt = T / 2048.0
    steps = max(int(round(T / dt)), 1)
    dt = T / steps
    total = 0.0
    for i in range(steps):
        s = (i + 0.5) * dt
        total += w6inf_norm(propagate_linear(u0, s)) ** 2
    return float(np.sqrt(total * dt))


def strichartz_bound(u0: SpectralField, T: float) -> float:
    """The comparison quantity sqrt(log(1+T)(1+T/R)) ||u0||_{H^7}."""
    R = u0.grid.R
    return float(np.sqrt(np.log1p(T) * (1.0 + T / R)) * h_norm(u0, 7.0))
