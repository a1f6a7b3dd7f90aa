"""Paraproduct identities: low-high localization, adjointness, decomposition."""

import numpy as np
import pytest

from gravwave.grid import (
    GridError,
    RealField,
    backward,
    lam,
    lp_low,
    lp_project,
    lp_range,
    make_grid,
    transform,
)
from gravwave.paracalc import composition_error, good_unknown, paraproduct, remainder


def random_field(grid, seed, cut=None):
    rng = np.random.default_rng(seed)
    n = grid.n
    if cut is None:
        cut = n // 3
    c = np.zeros((n, n), dtype=np.complex128)
    for _ in range(25):
        i = int(rng.integers(-cut, cut + 1))
        j = int(rng.integers(-cut, cut + 1))
        if i == 0 and j == 0:
            continue
        amp = rng.normal() + 1j * rng.normal()
        c[i % n, j % n] += amp
        c[(-i) % n, (-j) % n] += np.conj(amp)
    return RealField(grid, backward(grid, c).real)


GRID = make_grid(32, 2.0 * np.pi)


def test_identity_symbol():
    f = random_field(GRID, 0)
    g = paraproduct(RealField(GRID, np.ones((32, 32))), f)
    assert np.abs(g.samples - f.samples).max() < 1e-12


def test_output_is_real_and_mean_free():
    a = random_field(GRID, 1)
    f = random_field(GRID, 2)
    out = paraproduct(a, f)
    assert np.isrealobj(out.samples)
    assert abs(out.samples.mean()) < 1e-13


def test_low_high_localization():
    # P_k T_a (P_{<=k-2} f) = 0: the symbol cutoff keeps the output
    # frequency within a tiny relative distance of the function frequency
    for seed in range(5):
        a = random_field(GRID, 10 + seed)
        f = random_field(GRID, 20 + seed)
        for k in lp_range(GRID):
            low = RealField(GRID, backward(GRID, lp_low(transform(f), k - 2).coeffs).real)
            out = transform(paraproduct(a, low))
            band = lp_project(out, k)
            scale = max(np.abs(out.coeffs).max(), 1e-30)
            assert np.abs(band.coeffs).max() < 1e-12 * scale


def test_self_adjointness():
    dx2 = GRID.dx**2
    for seed in range(20):
        a = random_field(GRID, 100 + seed)
        f = random_field(GRID, 200 + seed)
        g = random_field(GRID, 300 + seed)
        lhs = np.sum(paraproduct(a, f).samples * g.samples) * dx2
        rhs = np.sum(f.samples * paraproduct(a, g).samples) * dx2
        scale = max(abs(lhs), abs(rhs), 1.0)
        assert abs(lhs - rhs) < 1e-12 * scale


def test_exact_decomposition():
    for seed in range(20):
        f = random_field(GRID, 400 + seed, cut=8)
        g = random_field(GRID, 500 + seed, cut=8)
        prod = f.samples * g.samples
        recon = (paraproduct(f, g) + paraproduct(g, f) + remainder(f, g)).samples
        # the decomposition is exact up to the shared mean, which the
        # paraproducts drop and the remainder therefore carries
        scale = max(np.abs(prod).max(), 1.0)
        assert np.abs(recon - prod).max() < 1e-12 * scale


def test_remainder_symmetry():
    f = random_field(GRID, 600, cut=8)
    g = random_field(GRID, 601, cut=8)
    d = remainder(f, g).samples - remainder(g, f).samples
    assert np.abs(d).max() < 1e-13


def test_composition_with_identity_vanishes():
    b = random_field(GRID, 700)
    f = random_field(GRID, 701)
    one = RealField(GRID, np.ones((32, 32)))
    err = composition_error(one, b, f)
    scale = max(np.abs(paraproduct(b, f).samples).max(), 1e-30)
    assert np.abs(err.samples).max() < 1e-12 * scale


def test_grid_mismatch_rejected():
    other = make_grid(64, 2.0 * np.pi)
    with pytest.raises(GridError):
        paraproduct(random_field(GRID, 800), random_field(other, 801))


def test_good_unknown_reduces_at_zero_velocity():
    class S:
        pass

    s = S()
    s.h = random_field(GRID, 900)
    s.phi = random_field(GRID, 901)
    B0 = RealField(GRID, np.zeros((32, 32)))
    U = good_unknown(s, B0)
    expect = transform(s.h).coeffs + 1j * lam(transform(s.phi)).coeffs
    assert np.abs(U.coeffs - expect).max() < 1e-10
