"""
Paraproducts and remainder operators for x-dependent symbols.

The paraproduct T_a f keeps only frequency pairs (theta, eta), with
theta the symbol frequency and eta the function frequency, that pass
the low-high cutoff ``transition(2^10 |theta| / |theta + 2 eta|)``;
the factor is taken as 0 when theta + 2 eta = 0, so T_a f always has
zero average.  The sum is a direct enumeration over retained symbol
modes; the cutoff is not a tensor product, so transform tricks do not
apply, and desk-scale mode counts keep this cheap.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .grid import (
    Grid,
    GridError,
    RealField,
    SpectralField,
    _modes,
    backward,
    forward,
    lam,
    lp_transition,
    transform,
)

RETAIN_REL = 1e-14  # drop symbol modes below this fraction of the peak


@lru_cache(maxsize=32)
def _pair_tables(grid: Grid):
    n = grid.n
    m = _modes(n)
    mx = m[:, None] * np.ones((1, n), dtype=np.int64)
    my = np.ones((n, 1), dtype=np.int64) * m[None, :]
    return m, mx, my


@lru_cache(maxsize=32)
def _normalization(grid: Grid) -> float:
    """Constant fixed by requiring T_1 = id on a mean-free probe mode."""
    n = grid.n
    probe = np.zeros((n, n))
    x = np.arange(n) * grid.dx
    probe[:, :] = np.cos(2.0 * np.pi / grid.R * x)[:, None]
    a = RealField(grid, np.ones((n, n)))
    f = RealField(grid, probe)
    raw = _paraproduct_raw(a, f, 1.0)
    Fp = forward(grid, probe)
    i = int(np.argmax(np.abs(Fp)))
    return float((Fp.flat[i] / raw.flat[i]).real)


def _paraproduct_raw(a: RealField, f: RealField, C: float) -> np.ndarray:
    grid = a.grid
    n = grid.n
    Fa = forward(grid, a.samples)
    Ff = forward(grid, f.samples)
    m, mx, my = _pair_tables(grid)

    mag = np.abs(Fa)
    retained = np.argwhere(mag > RETAIN_REL * max(mag.max(), 1e-300))
    out = np.zeros((n, n), dtype=np.complex128)
    half = n // 2
    for p, q in retained:
        t1, t2 = m[p], m[q]
        tnorm = np.hypot(float(t1), float(t2))
        dx2 = np.hypot(t1 + 2.0 * mx, t2 + 2.0 * my)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dx2 > 0, tnorm / np.maximum(dx2, 1e-300), np.inf)
        w = lp_transition(ratio * 2.0**10)
        w[dx2 == 0] = 0.0  # convention: factor is 0 when xi + eta = 0
        # drop pairs whose output frequency leaves the lattice
        valid = (mx + t1 >= -half) & (mx + t1 < half) & (my + t2 >= -half) & (my + t2 < half)
        w *= valid
        if not w.any():
            continue
        out += np.roll(w * Fa[p, q] * Ff, (p, q), axis=(0, 1))
    out *= C / grid.R**2
    out[0, 0] = 0.0
    return out


def paraproduct(a: RealField, f: RealField) -> RealField:
    """T_a f for a symbol a = a(x)."""
    if a.grid != f.grid:
        raise GridError("grid mismatch in paraproduct")
    C = _normalization(a.grid)
    return RealField(a.grid, backward(a.grid, _paraproduct_raw(a, f, C)).real)


def remainder(f: RealField, g: RealField) -> RealField:
    """H(f, g) = fg - T_f g - T_g f.  Symmetric by construction."""
    prod = RealField(f.grid, f.samples * g.samples)
    return prod - paraproduct(f, g) - paraproduct(g, f)


def composition_error(a: RealField, b: RealField, f: RealField) -> RealField:
    """E(a, b) f = T_a T_b f - T_{ab} f."""
    ab = RealField(a.grid, a.samples * b.samples)
    return paraproduct(a, paraproduct(b, f)) - paraproduct(ab, f)


def good_unknown(state, B: RealField) -> SpectralField:
    """The quasilinearizing variable h + i |nabla|^{1/2} (phi - T_B h).

    ``state`` is any object with RealField attributes ``h`` and ``phi``;
    B is the vertical boundary velocity.  Reduces to h + i Lambda phi
    when B = 0.
    """
    h, phi = state.h, state.phi
    corrected = phi - paraproduct(B, h)
    half = lam(transform(corrected))
    return SpectralField(h.grid, forward(h.grid, h.samples) + 1j * half.coeffs)
