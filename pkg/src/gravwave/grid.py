"""
Torus discretization, spectral transforms, radial Fourier multipliers,
dyadic decompositions and norm functionals.

Conventions
-----------
The domain is the square torus of period R, sampled on an n x n uniform
grid (n a power of two).  The forward transform approximates
``F u(xi) = int exp(-i x.xi) u(x) dx`` by ``(R/n)^2 * DFT`` and the
inverse is ``R^{-2} * sum exp(i x.xi)``, so frequencies live on the
lattice ``(2 pi Z / R)^2``.  The Nyquist row/column is zeroed after
every forward transform to keep Hermitian symmetry unambiguous.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

MAGIC = b"GWF1"
HEADER_SIZE = 32
FLAG_VOLUME = 1


class GridError(ValueError):
    """Invalid grid construction or ill-posed multiplier request."""


@dataclass(frozen=True)
class Grid:
    """Square torus of period R with n points per side.

    Frequencies are exactly ``2*pi*m/R`` for integer mode numbers
    ``m in [-n/2, n/2)`` stored in standard DFT order.
    """

    n: int
    R: float

    def __post_init__(self) -> None:
        n, R = self.n, self.R
        if n < 8 or (n & (n - 1)) != 0:
            raise GridError(f"n must be a power of two >= 8, got {n}")
        if not (R > 0):
            raise GridError(f"R must be positive, got {R}")

    # cached lattice arrays -------------------------------------------------
    @property
    def dx(self) -> float:
        return self.R / self.n

    @property
    def modes(self) -> np.ndarray:
        """Integer mode numbers in DFT order, shape (n,)."""
        return _modes(self.n)

    @property
    def k1(self) -> np.ndarray:
        """One-dimensional frequencies 2*pi*m/R, shape (n,)."""
        return (2.0 * np.pi / self.R) * _modes(self.n)

    @property
    def kx(self) -> np.ndarray:
        return self.k1[:, None] * np.ones((1, self.n))

    @property
    def ky(self) -> np.ndarray:
        return np.ones((self.n, 1)) * self.k1[None, :]

    @property
    def kabs(self) -> np.ndarray:
        k1 = self.k1
        return np.hypot(k1[:, None], k1[None, :])

    @property
    def x1(self) -> np.ndarray:
        return np.arange(self.n) * self.dx

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.x1
        return x[:, None] * np.ones((1, self.n)), np.ones((self.n, 1)) * x[None, :]

    def freq(self, i: int, j: int) -> tuple[float, float]:
        """Lattice frequency at DFT index (i, j)."""
        return float(self.k1[i]), float(self.k1[j])

    def dealias_mask(self, rule: float = 2.0 / 3.0) -> np.ndarray:
        """Boolean mask keeping |m| <= rule * n/2 in each axis."""
        cut = int(np.floor(rule * self.n / 2.0))
        m = np.abs(_modes(self.n))
        return (m[:, None] <= cut) & (m[None, :] <= cut)

    @property
    def kmin(self) -> float:
        """Smallest nonzero lattice frequency, 2*pi/R."""
        return 2.0 * np.pi / self.R

    @property
    def kmax(self) -> float:
        """Largest lattice frequency magnitude (corner of the lattice)."""
        return float(self.kabs.max())


def _modes(n: int) -> np.ndarray:
    return (np.fft.fftfreq(n) * n).astype(np.int64)


def make_grid(n: int, R: float) -> Grid:
    return Grid(n, float(R))


@dataclass(frozen=True)
class RealField:
    """Scalar sample array on the grid."""

    grid: Grid
    samples: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        s = np.asarray(self.samples, dtype=np.float64)
        if s.shape != (self.grid.n, self.grid.n):
            raise GridError(f"samples shape {s.shape} does not match grid n={self.grid.n}")
        if not np.all(np.isfinite(s)):
            raise GridError("non-finite samples")
        object.__setattr__(self, "samples", s)

    def __add__(self, other: "RealField") -> "RealField":
        _check_same(self.grid, other.grid)
        return RealField(self.grid, self.samples + other.samples)

    def __sub__(self, other: "RealField") -> "RealField":
        _check_same(self.grid, other.grid)
        return RealField(self.grid, self.samples - other.samples)

    def __mul__(self, c: float) -> "RealField":
        return RealField(self.grid, self.samples * c)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SpectralField:
    """Discrete Fourier coefficients on the frequency lattice."""

    grid: Grid
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (self.grid.n, self.grid.n):
            raise GridError(f"coeffs shape {c.shape} does not match grid n={self.grid.n}")
        if not np.all(np.isfinite(c)):
            raise GridError("non-finite coefficients")
        object.__setattr__(self, "coeffs", c)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same(self.grid, other.grid)
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, c: complex) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * c)

    __rmul__ = __mul__


def _check_same(a: Grid, b: Grid) -> None:
    if a != b:
        raise GridError(f"grid mismatch: {a} vs {b}")


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------

def forward(grid: Grid, samples: np.ndarray) -> np.ndarray:
    """Raw forward transform on an array; zeroes the Nyquist row/column."""
    c = sfft.fft2(samples) * (grid.R / grid.n) ** 2
    half = grid.n // 2
    c[half, :] = 0.0
    c[:, half] = 0.0
    return c

def backward(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Raw inverse transform (complex output)."""
    return sfft.ifft2(coeffs) * (grid.n / grid.R) ** 2


def transform(f: RealField) -> SpectralField:
    return SpectralField(f.grid, forward(f.grid, f.samples))


def inverse(F: SpectralField) -> RealField:
    return RealField(F.grid, backward(F.grid, F.coeffs).real)


def l2_norm(grid: Grid, samples: np.ndarray) -> float:
    """Quadrature L2 norm, sqrt(sum |u|^2 (R/n)^2)."""
    return float(np.sqrt(np.sum(np.abs(samples) ** 2))) * grid.dx


def mean(f: RealField) -> float:
    return float(f.samples.mean())


# ---------------------------------------------------------------------------
# radial Fourier multipliers
# ---------------------------------------------------------------------------

def abs_grad_pow(F: SpectralField, s: float) -> SpectralField:
    """|nabla|^s; the zero mode maps to 0.  Negative s requires zero mean."""
    g = F.grid
    k = g.kabs
    if s < 0:
        m0 = np.abs(F.coeffs[0, 0])
        scale = np.abs(F.coeffs).max()
        if m0 > 1e-13 * max(scale, 1.0):
            raise GridError("negative power of |nabla| applied to field with nonzero mean")
    mult = np.zeros_like(k)
    nz = k > 0
    mult[nz] = k[nz] ** s
    return SpectralField(g, F.coeffs * mult)


def lam(F: SpectralField) -> SpectralField:
    """Half-wave symbol |nabla|^{1/2}."""
    return abs_grad_pow(F, 0.5)


def bessel_pow(F: SpectralField, s: float) -> SpectralField:
    """<nabla>^s = (1+|xi|^2)^{s/2}; acts as identity on the zero mode."""
    g = F.grid
    return SpectralField(g, F.coeffs * (1.0 + g.kabs**2) ** (s / 2.0))


def grad(F: SpectralField) -> tuple[SpectralField, SpectralField]:
    g = F.grid
    return (
        SpectralField(g, 1j * g.k1[:, None] * F.coeffs),
        SpectralField(g, 1j * g.k1[None, :] * F.coeffs),
    )


def laplacian(F: SpectralField) -> SpectralField:
    g = F.grid
    return SpectralField(g, -(g.kabs**2) * F.coeffs)


def vertical_decay(F: SpectralField, y: float) -> SpectralField:
    """e^{y |nabla|} for y <= 0 (harmonic extension weight)."""
    if y > 0:
        raise GridError("vertical decay weight requires y <= 0")
    g = F.grid
    return SpectralField(g, F.coeffs * np.exp(y * g.kabs))


def half_wave(F: SpectralField, t: float) -> SpectralField:
    """e^{-i t Lambda} with Lambda = |nabla|^{1/2}; identity on the zero mode."""
    g = F.grid
    return SpectralField(g, F.coeffs * np.exp(-1j * t * np.sqrt(g.kabs)))


_SYMBOLS = {
    "abs": lambda F, **kw: abs_grad_pow(F, 1.0),
    "lam": lambda F, **kw: lam(F),
    "abs_pow": lambda F, *, s, **kw: abs_grad_pow(F, s),
    "bessel_pow": lambda F, *, s, **kw: bessel_pow(F, s),
    "grad": lambda F, **kw: grad(F),
    "laplacian": lambda F, **kw: laplacian(F),
    "vertical": lambda F, *, y, **kw: vertical_decay(F, y),
    "halfwave": lambda F, *, t, **kw: half_wave(F, t),
}


def apply_symbol(F: SpectralField, symbol: str, **kw):
    """Apply a radial multiplier by name.

    Names: ``abs`` (|nabla|), ``lam`` (|nabla|^{1/2}), ``abs_pow`` (s=),
    ``bessel_pow`` (s=), ``grad``, ``laplacian``, ``vertical`` (y=),
    ``halfwave`` (t=).
    """
    try:
        fn = _SYMBOLS[symbol]
    except KeyError:
        raise GridError(f"unknown symbol {symbol!r}") from None
    return fn(F, **kw)


# ---------------------------------------------------------------------------
# Littlewood-Paley decomposition
# ---------------------------------------------------------------------------

def smoothstep(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        gp = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        gm = np.where(1 - t > 0, np.exp(-1.0 / np.maximum(1 - t, 1e-300)), 0.0)
    return gp / (gp + gm)


def lp_transition(r: np.ndarray) -> np.ndarray:
    """The cutoff profile: 1 on |r| <= 3/4, 0 on |r| >= 3/2, smooth between."""
    return smoothstep(2.0 - (4.0 / 3.0) * np.abs(r))


def lp_weight(grid: Grid, k: int) -> np.ndarray:
    """Multiplier of P_k: transition(|xi|/2^k) - transition(|xi|/2^{k-1}).

    Vanishes identically on the zero frequency.
    """
    r = grid.kabs
    w = lp_transition(r / 2.0**k) - lp_transition(r / 2.0 ** (k - 1))
    w[0, 0] = 0.0
    return w


def lp_low_weight(grid: Grid, k: int) -> np.ndarray:
    """Multiplier of P_{<=k}; keeps the zero frequency."""
    return lp_transition(grid.kabs / 2.0**k)


def lp_project(F: SpectralField, k: int) -> SpectralField:
    return SpectralField(F.grid, F.coeffs * lp_weight(F.grid, k))


def lp_low(F: SpectralField, k: int) -> SpectralField:
    return SpectralField(F.grid, F.coeffs * lp_low_weight(F.grid, k))


def lp_range(grid: Grid) -> range:
    """Dyadic indices k for which P_k can be nonzero on the lattice."""
    lo = int(np.floor(np.log2(grid.kmin * 3.0 / 8.0)))
    hi = int(np.ceil(np.log2(grid.kmax * 8.0 / 3.0))) + 1
    return range(lo, hi + 1)


# ---------------------------------------------------------------------------
# spatial dyadic decomposition Q_j
# ---------------------------------------------------------------------------

def torus_distance(grid: Grid) -> np.ndarray:
    """Geodesic distance from the torus center (R/2, R/2)."""
    d1 = np.abs(grid.x1 - grid.R / 2.0)
    d1 = np.minimum(d1, grid.R - d1)
    return np.hypot(d1[:, None], d1[None, :])


def spatial_weight(grid: Grid, j: int) -> np.ndarray:
    """Multiplier of Q_j for j >= 1 (annulus at distance ~ 2^j from center)."""
    d = torus_distance(grid)
    return lp_transition(d / 2.0**j) - lp_transition(d / 2.0 ** (j - 1))


def spatial_cutoff(f: RealField, j: int) -> RealField:
    """Q_j f.  Q_0 is the complement of the sum over j >= 1."""
    if j < 0:
        raise GridError("dyadic index j must be >= 0")
    if j == 0:
        total = np.zeros_like(f.samples)
        for jj in spatial_range(f.grid):
            total += spatial_weight(f.grid, jj)
        return RealField(f.grid, f.samples * (1.0 - total))
    return RealField(f.grid, f.samples * spatial_weight(f.grid, j))


def spatial_range(grid: Grid) -> range:
    """Indices j >= 1 for which Q_j can be nonzero."""
    hi = int(np.ceil(np.log2(np.sqrt(2.0) * grid.R)))
    return range(1, hi + 1)


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def sobolev_norm(F: SpectralField, s: float) -> float:
    g = F.grid
    w = (1.0 + g.kabs**2) ** s
    return float(np.sqrt(np.sum(w * np.abs(F.coeffs) ** 2)) / g.R)


def sup_norm(f: RealField) -> float:
    return float(np.abs(f.samples).max())


def holder_norm(f: RealField, r: float) -> float:
    """Holder-Zygmund norm: ||P_{<=0}u||_inf + sup_{k>0} 2^{kr} ||P_k u||_inf."""
    F = transform(f)
    g = f.grid
    low = backward(g, F.coeffs * lp_low_weight(g, 0)).real
    out = float(np.abs(low).max())
    best = 0.0
    for k in lp_range(g):
        if k <= 0:
            continue
        w = lp_weight(g, k)
        if not w.any():
            continue
        pk = backward(g, F.coeffs * w).real
        best = max(best, 2.0 ** (k * r) * float(np.abs(pk).max()))
    return out + best


def z_norm(f: RealField, alpha: float = 2.0 / 3.0) -> float:
    """Weighted norm ||(1+||x||)^alpha <nabla>^8 u||_{L^2}.

    The weight is the geodesic distance from the torus center.  The
    exponent defaults to the periodic value 2/3; alpha is exposed only
    for exploratory runs.
    """
    g = f.grid
    F = transform(f)
    u8 = backward(g, bessel_pow(F, 8.0).coeffs).real
    w = (1.0 + torus_distance(g)) ** alpha
    return l2_norm(g, w * u8)


# ---------------------------------------------------------------------------
# binary snapshot format
# ---------------------------------------------------------------------------

def _pack_header(n: int, R: float, flags: int) -> bytes:
    h = MAGIC + struct.pack("<IdQ", n, R, flags)
    return h + b"\x00" * (HEADER_SIZE - len(h))


def write_field(path, f: RealField, flags: int = 0) -> None:
    """Binary snapshot: 32-byte header then n^2 little-endian f64, row-major."""
    with open(path, "wb") as fh:
        fh.write(_pack_header(f.grid.n, f.grid.R, flags))
        fh.write(f.samples.astype("<f8").tobytes())


def read_field(path) -> RealField:
    with open(path, "rb") as fh:
        header = fh.read(HEADER_SIZE)
        if header[:4] != MAGIC:
            raise GridError(f"bad magic in {path}")
        n, R, flags = struct.unpack("<IdQ", header[4:24])
        if flags & FLAG_VOLUME:
            raise GridError(f"{path} holds a volume snapshot; use read_volume")
        data = np.frombuffer(fh.read(8 * n * n), dtype="<f8").reshape(n, n)
    return RealField(Grid(int(n), float(R)), data.copy())
