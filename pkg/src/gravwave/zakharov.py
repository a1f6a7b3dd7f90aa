"""
Nonlinear evolution of the surface system

    h_t   = G(h) phi,
    phi_t = -h - |grad phi|^2 / 2
            + (G(h)phi + grad h . grad phi)^2 / (2 (1 + |grad h|^2)),

together with its conserved energy, the Taylor-sign coefficient and the
complex diagonalizing variable U = h + i |nabla|^{1/2} phi.

The potential phi is a gauge variable (defined up to a constant); states
are stored mean-free and the gauge is re-imposed after every step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dtn
from .grid import (
    Grid,
    GridError,
    RealField,
    SpectralField,
    backward,
    forward,
    mean,
)


class BlowUpError(RuntimeError):
    """The trajectory left the resolvable regime; carries the last good state."""

    def __init__(self, reason: str, state: "SurfaceState"):
        super().__init__(f"trajectory stopped: {reason} at t={state.t:.6g}")
        self.reason = reason
        self.state = state


@dataclass(frozen=True)
class SurfaceState:
    """Surface elevation and boundary potential at one instant.

    phi is stored mean-free; the construction subtracts its average.
    """

    grid: Grid
    t: float
    h: RealField
    phi: RealField

    def __post_init__(self) -> None:
        if self.h.grid != self.grid or self.phi.grid != self.grid:
            raise GridError("state fields must live on the state grid")
        m = mean(self.phi)
        if m != 0.0:
            object.__setattr__(self, "phi", RealField(self.grid, self.phi.samples - m))


@dataclass
class TrajectoryLog:
    """Append-only record of norm and invariant diagnostics along a run."""

    times: list = field(default_factory=list)
    rows: list = field(default_factory=list)  # dicts keyed by column name

    COLUMNS = ("t", "energy", "hN", "c6", "z", "sup_h", "min_a", "px", "py")

    def append(self, row: dict) -> None:
        t = float(row["t"])
        if self.times and t <= self.times[-1]:
            raise ValueError(f"log times must increase, got {t} after {self.times[-1]}")
        self.times.append(t)
        self.rows.append({k: float(row[k]) for k in self.COLUMNS})


class DtnCache:
    """Warm-start carrier for the volume solver along a trajectory.

    Keeps the last few converged volume states and hands the solver a
    polynomial extrapolation in time, which cuts the iteration count
    for smoothly varying surfaces.
    """

    DEPTH = 3  # polynomial extrapolation through this many past times

    def __init__(self):
        self._hist: list = []  # (t, volume state), strictly increasing t
        self.total_iterations = 0

    @property
    def state(self):
        return self._hist[-1][1] if self._hist else None

    def predict(self, t: float | None):
        """Volume state extrapolated to time t (or the latest one)."""
        if not self._hist:
            return None
        t_last = self._hist[-1][0]
        if t is None or len(self._hist) == 1 or t < t_last:
            return self._hist[-1][1]
        span = t_last - self._hist[0][0]
        if t - t_last > 1.5 * span:
            return self._hist[-1][1]
        times = [ti for ti, _ in self._hist]
        out = None
        for i, (ti, gi) in enumerate(self._hist):
            w = 1.0
            for j, tj in enumerate(times):
                if j != i:
                    w *= (t - tj) / (ti - tj)
            if out is None:
                out = tuple(w * a for a in gi)
            else:
                out = tuple(o + w * a for o, a in zip(out, gi))
        return out

    def push(self, t: float, state) -> None:
        if self._hist and t == self._hist[-1][0]:
            # same time, fresher stage: replace without shifting history
            self._hist[-1] = (t, state)
        elif self._hist and t < self._hist[-1][0]:
            # off-trajectory query: restart the history
            self._hist = [(t, state)]
        else:
            self._hist.append((t, state))
            del self._hist[: -self.DEPTH]


def _gradients(grid: Grid, samples: np.ndarray, mask: np.ndarray):
    F = forward(grid, samples) * mask
    gx = backward(grid, 1j * grid.k1[:, None] * F).real
    gy = backward(grid, 1j * grid.k1[None, :] * F).real
    return gx, gy


def _surface_operator(state: SurfaceState, params: dtn.DtnParams, cache: DtnCache | None):
    """G, B, V for the current state, honoring the solver mode."""
    if params.mode == "series2":
        G = dtn.dtn_series(state.h, state.phi, order=2)
        grid = state.grid
        mask = grid.dealias_mask()
        hx1, hx2 = _gradients(grid, state.h.samples, mask)
        px1, px2 = _gradients(grid, state.phi.samples, mask)
        B = RealField(grid, (G.samples + hx1 * px1 + hx2 * px2) / (1.0 + hx1**2 + hx2**2))
        V = (RealField(grid, px1 - B.samples * hx1), RealField(grid, px2 - B.samples * hx2))
        return dtn.DtnResult(G, B, V, 0, 0.0)
    if cache is not None:
        res, st = dtn.dtn_full(state.h, state.phi, params, initial=cache.predict(state.t), keep_state=True)
        cache.push(state.t, st)
        cache.total_iterations += res.iterations
        return res
    return dtn.dtn_full(state.h, state.phi, params)


def rhs(
    state: SurfaceState,
    params: dtn.DtnParams = dtn.DtnParams(),
    cache: DtnCache | None = None,
) -> tuple[RealField, RealField]:
    """(h_t, phi_t) of the surface system."""
    grid = state.grid
    res = _surface_operator(state, params, cache)
    mask = grid.dealias_mask()
    hx1, hx2 = _gradients(grid, state.h.samples, mask)
    px1, px2 = _gradients(grid, state.phi.samples, mask)
    G = res.G.samples
    num = G + hx1 * px1 + hx2 * px2
    phit = -state.h.samples - 0.5 * (px1**2 + px2**2) + num**2 / (2.0 * (1.0 + hx1**2 + hx2**2))
    phit = phit - phit.mean()  # gauge: phi stays mean-free
    return res.G, RealField(grid, phit)


def rhs_velocity_form(
    state: SurfaceState,
    params: dtn.DtnParams = dtn.DtnParams(),
) -> tuple[RealField, RealField]:
    """Equivalent right-hand side written with the boundary velocities,
    phi_t = -h + (B^2 - 2 B V.grad h - |V|^2)/2; used as a cross-check."""
    grid = state.grid
    res = _surface_operator(state, params, None)
    mask = grid.dealias_mask()
    hx1, hx2 = _gradients(grid, state.h.samples, mask)
    B = res.B.samples
    V1, V2 = res.V[0].samples, res.V[1].samples
    phit = -state.h.samples + 0.5 * (B**2 - 2.0 * B * (V1 * hx1 + V2 * hx2) - (V1**2 + V2**2))
    phit = phit - phit.mean()
    return res.G, RealField(grid, phit)


# ---------------------------------------------------------------------------
# complex variable and the nonlinearity of its evolution equation
# ---------------------------------------------------------------------------

def complex_variable(state: SurfaceState) -> SpectralField:
    """U = h + i |nabla|^{1/2} phi in spectral form."""
    grid = state.grid
    Fh = forward(grid, state.h.samples)
    Fp = forward(grid, state.phi.samples)
    lam = np.sqrt(grid.kabs)
    return SpectralField(grid, Fh + 1j * lam * Fp)


def state_from_complex(grid: Grid, t: float, U: np.ndarray) -> SurfaceState:
    """Invert U = h + i Lambda phi; the zero mode of phi is gauged away."""
    Uc = np.conj(U[(-np.arange(grid.n)) % grid.n][:, (-np.arange(grid.n)) % grid.n])
    Fh = 0.5 * (U + Uc)
    lam = np.sqrt(grid.kabs)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = np.where(lam > 0, 1.0 / np.where(lam > 0, lam, 1.0), 0.0)
    Fp = (U - Uc) / 2j * inv
    h = backward(grid, Fh).real
    phi = backward(grid, Fp).real
    return SurfaceState(grid, t, RealField(grid, h), RealField(grid, phi))


def _nonlinearity(
    state: SurfaceState,
    params: dtn.DtnParams,
    cache: DtnCache | None,
) -> np.ndarray:
    """Spectral N with U_t = -i Lambda U + N, namely
    N = (G - |nabla|) phi + (i/2)|nabla|^{1/2}((1+|grad h|^2) B^2 - |grad phi|^2)."""
    grid = state.grid
    res = _surface_operator(state, params, cache)
    mask = grid.dealias_mask()
    hx1, hx2 = _gradients(grid, state.h.samples, mask)
    px1, px2 = _gradients(grid, state.phi.samples, mask)
    Fp = forward(grid, state.phi.samples)
    lin = backward(grid, grid.kabs * Fp).real
    quad = (1.0 + hx1**2 + hx2**2) * res.B.samples**2 - (px1**2 + px2**2)
    Fq = forward(grid, quad) * mask
    lam = np.sqrt(grid.kabs)
    return forward(grid, res.G.samples - lin) + 0.5j * lam * Fq


# ---------------------------------------------------------------------------
# time stepping
# ---------------------------------------------------------------------------

def _check_state(state: SurfaceState, reference: SurfaceState) -> SurfaceState:
    g = state.grid
    hs = state.h.samples
    if not (np.all(np.isfinite(hs)) and np.all(np.isfinite(state.phi.samples))):
        raise BlowUpError("non-finite fields", reference)
    if np.abs(hs).max() > 0.5 * (2.0 * np.pi / g.kmax):
        # crest height beyond half the shortest resolvable wavelength
        raise BlowUpError("surface height left the resolvable regime", reference)
    return state


def step(
    state: SurfaceState,
    dt: float,
    scheme: str = "ifrk4",
    params: dtn.DtnParams = dtn.DtnParams(),
    cache: DtnCache | None = None,
) -> SurfaceState:
    """Advance one step of size dt with rk4 or ifrk4.

    ifrk4 integrates the diagonalized variable U with the exact factor
    e^{-i t Lambda} on the linear part, so pure linear dynamics incur no
    phase error beyond roundoff.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    grid = state.grid
    if dt > 0.5 / np.sqrt(grid.kmax):
        raise ValueError(
            f"dt={dt:g} exceeds the stability guard 0.5/sqrt(kmax)={0.5 / np.sqrt(grid.kmax):g}"
        )
    if scheme == "rk4":
        out = _rk4(state, dt, params, cache)
    elif scheme == "ifrk4":
        out = _ifrk4(state, dt, params, cache)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    return _check_state(out, state)


def _rk4(state, dt, params, cache):
    grid = state.grid

    def f(s):
        try:
            ht, pt = rhs(s, params, cache)
        except (dtn.DtnConvergenceError, GridError) as e:
            raise BlowUpError(str(e), state) from e
        return ht.samples, pt.samples

    h0, p0 = state.h.samples, state.phi.samples
    k1h, k1p = f(state)
    s2 = SurfaceState(grid, state.t + dt / 2, RealField(grid, h0 + dt / 2 * k1h), RealField(grid, p0 + dt / 2 * k1p))
    k2h, k2p = f(s2)
    s3 = SurfaceState(grid, state.t + dt / 2, RealField(grid, h0 + dt / 2 * k2h), RealField(grid, p0 + dt / 2 * k2p))
    k3h, k3p = f(s3)
    s4 = SurfaceState(grid, state.t + dt, RealField(grid, h0 + dt * k3h), RealField(grid, p0 + dt * k3p))
    k4h, k4p = f(s4)
    h1 = h0 + dt / 6 * (k1h + 2 * k2h + 2 * k3h + k4h)
    p1 = p0 + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p)
    return SurfaceState(grid, state.t + dt, RealField(grid, h1), RealField(grid, p1))


def _ifrk4(state, dt, params, cache):
    grid = state.grid
    lam = np.sqrt(grid.kabs)
    e_half = np.exp(-0.5j * dt * lam)
    e_full = e_half * e_half
    U0 = complex_variable(state).coeffs

    def N(U, t):
        s = state_from_complex(grid, t, U)
        try:
            return _nonlinearity(s, params, cache)
        except (dtn.DtnConvergenceError, GridError) as e:
            raise BlowUpError(str(e), state) from e

    t0 = state.t
    s1 = N(U0, t0)
    s2 = N(e_half * (U0 + dt / 2 * s1), t0 + dt / 2)
    s3 = N(e_half * U0 + dt / 2 * s2, t0 + dt / 2)
    s4 = N(e_full * U0 + dt * e_half * s3, t0 + dt)
    U1 = e_full * U0 + dt / 6 * (e_full * s1 + 2 * e_half * (s2 + s3) + s4)
    return state_from_complex(grid, t0 + dt, U1)


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def energy(state: SurfaceState, params: dtn.DtnParams = dtn.DtnParams()) -> float:
    """E = int (phi G(h)phi + h^2) / 2 by grid quadrature."""
    res = _surface_operator(state, params, None)
    g = state.grid
    integrand = 0.5 * (state.phi.samples * res.G.samples + state.h.samples**2)
    return float(integrand.sum()) * g.dx**2


def taylor_coefficient(state: SurfaceState, params: dtn.DtnParams = dtn.DtnParams()) -> RealField:
    """The Taylor-sign coefficient a = 1 + B_t + V . grad B, evaluated as

    a = (1 + a_tilde - G(h)[B^2+|V|^2+2h]/2) / (1 + |grad h|^2)

    with a_tilde = V.grad B - (G phi) div V - grad h.(V.grad V)
                   - (V.grad B)|grad h|^2 + (V.grad h)(grad B.grad h).
    """
    grid = state.grid
    res = _surface_operator(state, params, None)
    mask = grid.dealias_mask()
    hx1, hx2 = _gradients(grid, state.h.samples, mask)
    B = res.B.samples
    V1, V2 = res.V[0].samples, res.V[1].samples
    G = res.G.samples

    Bx1, Bx2 = _gradients(grid, B, mask)
    V1x1, V1x2 = _gradients(grid, V1, mask)
    V2x1, V2x2 = _gradients(grid, V2, mask)

    VgB = V1 * Bx1 + V2 * Bx2
    divV = V1x1 + V2x2
    VgV1 = V1 * V1x1 + V2 * V1x2
    VgV2 = V1 * V2x1 + V2 * V2x2
    slope2 = hx1**2 + hx2**2
    a_tld = (
        VgB
        - G * divV
        - (hx1 * VgV1 + hx2 * VgV2)
        - VgB * slope2
        + (V1 * hx1 + V2 * hx2) * (Bx1 * hx1 + Bx2 * hx2)
    )
    carrier = RealField(grid, B**2 + V1**2 + V2**2 + 2.0 * state.h.samples)
    if params.mode == "series2":
        Gc = dtn.dtn_series(state.h, carrier, order=2).samples
    else:
        Gc = dtn.dtn_full(state.h, carrier, params).G.samples
    a = (1.0 + a_tld - 0.5 * Gc) / (1.0 + slope2)
    return RealField(grid, a)


def momentum(state: SurfaceState) -> tuple[float, float]:
    """Average of grad phi over the torus; identically zero for any
    single-valued potential, kept as a roundoff monitor."""
    grid = state.grid
    gx, gy = _gradients(grid, state.phi.samples, np.ones((grid.n, grid.n), dtype=bool))
    return float(gx.mean()), float(gy.mean())


def mean_h(state: SurfaceState) -> float:
    return mean(state.h)
