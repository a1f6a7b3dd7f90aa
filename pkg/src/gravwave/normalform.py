"""
Quadratic multipliers, resonance phase, profile and boundary terms of
the normal-form analysis of the diagonalized surface system.

The quadratic layer of U_t = -i Lambda U + N splits into four bilinear
pieces N_{mu nu}[U_mu, U_nu] with multipliers built from the two
elementary symbols

    m1(xi1, xi2) = (|xi1+xi2||xi2| - (xi1+xi2).xi2) / sqrt(|xi2|),
    m2(xi1, xi2) = sqrt(|xi1+xi2|) (|xi1||xi2| + xi1.xi2)
                   / sqrt(|xi1||xi2|),

and the resonance phase Phi = sqrt(|xi1+xi2|) - mu sqrt(|xi1|)
- nu sqrt(|xi2|).  Since Phi vanishes only at degenerate frequency
triples, where the multipliers vanish too, each quadratic Duhamel
contribution integrates by parts into a boundary term W_{mu nu} whose
removal from the profile increment leaves a cubic-order residual.

The exact multiplier combination is

    m_{mu nu}(xi1, xi2) = (i/8) (nu m1(xi1, xi2) + mu m1(xi2, xi1))
                          - (i mu nu / 8) m2(xi1, xi2),

fixed by expanding the quadratic nonlinearity in the +/- components of
U and symmetrizing over the two arguments; it is validated against the
field-side evaluation of the quadratic nonlinearity in the test suite.

Bilinear sums are direct pair enumerations over retained modes: the
weight m/Phi is not a tensor-product symbol, so no transform shortcut
exists, and desk-scale mode counts keep the enumeration cheap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import zakharov
from .grid import Grid, GridError, RealField, SpectralField, _modes, forward

COEFF_RETAIN = 1e-14  # drop input modes below this fraction of the peak


# ---------------------------------------------------------------------------
# elementary symbols and the resonance phase
# ---------------------------------------------------------------------------

def _norms(xi):
    xi = np.asarray(xi, dtype=float)
    return np.sqrt(np.sum(xi * xi, axis=-1))


def m_symbol(xi1, xi2, which: str):
    """One of the two elementary quadratic symbols, m1 or m2.

    Vanishing frequencies are mapped to 0 (their continuous limit).
    Accepts arrays of 2-vectors in the trailing axis.
    """
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    s = xi1 + xi2
    a, b, c = _norms(s), _norms(xi1), _norms(xi2)
    if which == "m1":
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (a * c - np.sum(s * xi2, axis=-1)) / np.sqrt(np.where(c > 0, c, 1.0))
        return np.where((a > 0) & (b > 0) & (c > 0), out, 0.0)
    if which == "m2":
        bc = b * c
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.sqrt(a) * (bc + np.sum(xi1 * xi2, axis=-1)) / np.sqrt(np.where(bc > 0, bc, 1.0))
        return np.where((a > 0) & (bc > 0), out, 0.0)
    raise ValueError(f"symbol must be 'm1' or 'm2', got {which!r}")


def phase(xi1, xi2, mu: int, nu: int):
    """Resonance phase Phi = sqrt|xi1+xi2| - mu sqrt|xi1| - nu sqrt|xi2|."""
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    return (
        np.sqrt(_norms(xi1 + xi2))
        - mu * np.sqrt(_norms(xi1))
        - nu * np.sqrt(_norms(xi2))
    )


def m_combination(xi1, xi2, mu: int, nu: int):
    """The multiplier of the (mu, nu) piece of the quadratic layer."""
    m1a = m_symbol(xi1, xi2, "m1")
    m1b = m_symbol(xi2, xi1, "m1")
    m2 = m_symbol(xi1, xi2, "m2")
    return 0.125j * (nu * m1a + mu * m1b) - 0.125j * (mu * nu) * m2


@dataclass(frozen=True)
class MultiplierSample:
    """One evaluation of an elementary symbol with its phase and ratio."""

    xi1: tuple
    xi2: tuple
    which: str
    mu: int
    nu: int
    m: float
    Phi: float
    ratio: float


def sample_multiplier(xi1, xi2, which: str, mu: int, nu: int) -> MultiplierSample:
    """Evaluate an elementary symbol together with its resonance phase.

    The ratio m/Phi is 0 by convention whenever any of xi1, xi2 or
    xi1 + xi2 vanishes (where both numerator and phase are 0).
    """
    if mu not in (1, -1) or nu not in (1, -1):
        raise ValueError("mu and nu must be +1 or -1")
    m = float(m_symbol(xi1, xi2, which))
    Phi = float(phase(xi1, xi2, mu, nu))
    degenerate = (
        _norms(xi1) == 0.0 or _norms(xi2) == 0.0 or _norms(np.add(xi1, xi2)) == 0.0
    )
    ratio = 0.0 if degenerate else m / Phi
    if not (np.isfinite(m) and np.isfinite(ratio)):
        raise GridError("multiplier sample is not finite")
    return MultiplierSample(tuple(xi1), tuple(xi2), which, mu, nu, m, Phi, ratio)


# ---------------------------------------------------------------------------
# profile
# ---------------------------------------------------------------------------

def profile(U: SpectralField, t: float) -> SpectralField:
    """The interaction-picture profile e^{i t Lambda} U."""
    grid = U.grid
    return SpectralField(grid, np.exp(1j * t * np.sqrt(grid.kabs)) * U.coeffs)


def _conj_reflect(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    idx = (-np.arange(grid.n)) % grid.n
    return np.conj(coeffs[idx][:, idx])


# ---------------------------------------------------------------------------
# bilinear pair enumeration
# ---------------------------------------------------------------------------

def _retained(grid: Grid, coeffs: np.ndarray, shell: float):
    """Mode vectors and coefficients retained for pair enumeration."""
    m = _modes(grid.n)
    mx = m[:, None] * np.ones((1, grid.n), dtype=np.int64)
    my = np.ones((grid.n, 1), dtype=np.int64) * m[None, :]
    mag = np.abs(coeffs)
    keep = (
        (mag > COEFF_RETAIN * max(mag.max(), 1e-300))
        & (np.hypot(mx, my) <= shell)
        & ((mx != 0) | (my != 0))
    )
    return np.stack([mx[keep], my[keep]], axis=-1), coeffs[keep]


def _bilinear(U: SpectralField, mu: int, nu: int, weight, shell: float | None) -> np.ndarray:
    """Sum_{xi1+xi2=xi} weight(xi1, xi2) U_mu(xi1) U_nu(xi2) on the lattice.

    weight receives physical frequency 2-vectors; U_+ is U and U_- its
    conjugate reflection.  Pairs whose sum is zero or leaves the lattice
    (including the Nyquist rows) are dropped.
    """
    grid = U.grid
    n = grid.n
    if shell is None:
        shell = n / 3.0
    Up = U.coeffs
    Um = _conj_reflect(grid, Up)
    modes1, c1 = _retained(grid, Up if mu > 0 else Um, shell)
    modes2, c2 = _retained(grid, Up if nu > 0 else Um, shell)
    out = np.zeros((n, n), dtype=np.complex128)
    if len(c1) == 0 or len(c2) == 0:
        return out
    k0 = grid.kmin  # 2 pi / R, modes -> physical frequencies
    xi1 = k0 * modes1[:, None, :].astype(float)
    xi2 = k0 * modes2[None, :, :].astype(float)
    w = weight(xi1, xi2)
    vals = w * c1[:, None] * c2[None, :] / grid.R**2
    s = modes1[:, None, :] + modes2[None, :, :]
    half = n // 2
    ok = (
        (np.abs(s[..., 0]) < half)
        & (np.abs(s[..., 1]) < half)
        & ((s[..., 0] != 0) | (s[..., 1] != 0))
    )
    ix = s[..., 0][ok] % n
    iy = s[..., 1][ok] % n
    np.add.at(out, (ix, iy), vals[ok])
    return out


def quadratic_boundary(U: SpectralField, t: float, mu: int, nu: int, shell: float | None = None) -> SpectralField:
    """The normal-form boundary term W_{mu nu} at time t, in profile form.

    Satisfies e^{-i t Lambda} W^hat = C sum (m/(i Phi)) U_mu U_nu over
    retained pairs; the ratio is 0 at degenerate triples.
    """
    grid = U.grid

    def weight(xi1, xi2):
        m = m_combination(xi1, xi2, mu, nu)
        Phi = phase(xi1, xi2, mu, nu)
        with np.errstate(divide="ignore", invalid="ignore"):
            r = m / (1j * np.where(Phi != 0, Phi, 1.0))
        return np.where(Phi != 0, r, 0.0)

    raw = _bilinear(U, mu, nu, weight, shell)
    return SpectralField(grid, np.exp(1j * t * np.sqrt(grid.kabs)) * raw)


def n2_bilinear(U: SpectralField, mu: int, nu: int, shell: float | None = None) -> SpectralField:
    """The (mu, nu) piece of the quadratic nonlinearity, N_{mu nu}."""
    return SpectralField(
        U.grid, _bilinear(U, mu, nu, lambda a, b: m_combination(a, b, mu, nu), shell)
    )


def n2_total(U: SpectralField, shell: float | None = None) -> SpectralField:
    """Sum of the four bilinear pieces; equals the quadratic layer of N."""
    grid = U.grid
    out = np.zeros((grid.n, grid.n), dtype=np.complex128)
    for mu in (1, -1):
        for nu in (1, -1):
            out += n2_bilinear(U, mu, nu, shell).coeffs
    return SpectralField(grid, out)


def boundary_sum(U: SpectralField, t: float, shell: float | None = None) -> SpectralField:
    """Sum over (mu, nu) of the boundary terms W_{mu nu}(t)."""
    grid = U.grid
    out = np.zeros((grid.n, grid.n), dtype=np.complex128)
    for mu in (1, -1):
        for nu in (1, -1):
            out += quadratic_boundary(U, t, mu, nu, shell).coeffs
    return SpectralField(grid, out)


# ---------------------------------------------------------------------------
# cancellation-order driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResidualReport:
    """Scaling of the raw quadratic Duhamel term and of the residual
    left after subtracting the normal-form boundary terms."""

    epsilons: tuple
    duhamel: tuple
    residual: tuple

    @staticmethod
    def _slope(eps, vals) -> float:
        return float(np.polyfit(np.log(eps), np.log(vals), 1)[0])

    @property
    def duhamel_slope(self) -> float:
        return self._slope(self.epsilons, self.duhamel)

    @property
    def residual_slope(self) -> float:
        return self._slope(self.epsilons, self.residual)


def _l2(grid: Grid, coeffs: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(coeffs) ** 2))) / grid.R


def residual_order(
    data,
    epsilons,
    T: float,
    dt: float,
    scheme: str = "ifrk4",
    params=None,
    shell: float | None = None,
) -> ResidualReport:
    """Measure the cancellation order of the normal form along evolutions.

    ``data(eps)`` must return the initial SurfaceState of size eps.  For
    each eps the state is advanced to time T; the report holds

        d(eps) = ||Y(T) - Y(0)||_{L^2},
        r(eps) = ||Y(T) - Y(0) - sum_{mu nu}(W(T) - W(0))||_{L^2},

    with Y the profile of U.  The raw increment d carries the quadratic
    layer (slope ~2 in eps); subtracting the boundary terms cancels it,
    leaving the cubic-order r (slope ~3).
    """
    from . import dtn

    if params is None:
        params = dtn.DtnParams()
    eps = tuple(float(e) for e in epsilons)
    dnorms = []
    rnorms = []
    for e in eps:
        state = data(e)
        grid = state.grid
        U0 = zakharov.complex_variable(state)
        W0 = boundary_sum(U0, 0.0, shell)
        cache = zakharov.DtnCache()
        steps = int(round(T / dt))
        for _ in range(steps):
            state = zakharov.step(state, dt, scheme, params, cache)
        UT = zakharov.complex_variable(state)
        Y0 = U0.coeffs
        YT = profile(UT, state.t).coeffs
        WT = boundary_sum(UT, state.t, shell)
        d = YT - Y0
        r = d - (WT.coeffs - W0.coeffs)
        dnorms.append(_l2(grid, d))
        rnorms.append(_l2(grid, r))
    return ResidualReport(eps, tuple(dnorms), tuple(rnorms))
