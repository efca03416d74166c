"""Periodic-box Fourier representation and elementary linear operators.

Conventions
-----------
A field on the box ``[0, L)^3`` sampled on ``n^3`` points is represented by
coefficients ``F`` with ``f(x) = sum_xi F(xi) exp(i xi.x)``, i.e. ``F = fftn(f) / n^3``.
Wavenumbers are ``2 pi / L`` times integer triples in standard FFT order.

The L2 norm of a physical field is the root-mean-square over the grid, which
equals the Euclidean norm of its coefficients (Parseval).

Symbols involving ``1/|xi|`` or ``1/|xi_h|`` are set to zero at ``xi = 0`` and on
the vertical axis ``xi_h = 0``.  Symbols evaluated on a grid are also zero on the
Nyquist planes.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft as sfft

DEFAULT_BOX_LENGTH = 2 * np.pi * 16
HERMITIAN_TOL = 1e-10
DIVERGENCE_TOL = 1e-12


def fft_workers():
    """Worker count for FFTs, capped by ``ROTWAVE_THREADS`` when set."""
    value = os.environ.get("ROTWAVE_THREADS")
    if not value:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        return 1


def fftn(a, axes=(-3, -2, -1)):
    return sfft.fftn(a, axes=axes, workers=fft_workers())


def ifftn(a, axes=(-3, -2, -1)):
    return sfft.ifftn(a, axes=axes, workers=fft_workers())


@dataclass(frozen=True)
class Grid:
    """Cubic periodic grid with ``n`` points per axis and side ``box_length``."""

    n: int
    box_length: float = DEFAULT_BOX_LENGTH

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 8, got {self.n!r}")
        if not self.box_length > 0:
            raise ValueError(f"box_length must be positive, got {self.box_length!r}")

    @property
    def shape(self):
        return (self.n, self.n, self.n)

    @property
    def dk(self):
        return 2 * np.pi / self.box_length

    @cached_property
    def index(self):
        """Integer wavenumber indices in FFT order."""
        return np.fft.fftfreq(self.n, 1.0 / self.n).round().astype(np.int64)

    @cached_property
    def index_vectors(self):
        m = self.index
        return m[:, None, None], m[None, :, None], m[None, None, :]

    @cached_property
    def wavevector(self):
        """Broadcastable wavevector components ``(k1, k2, k3)``."""
        return tuple(self.dk * m.astype(float) for m in self.index_vectors)

    @cached_property
    def k_full(self):
        """Wavevector components as an array of shape ``(3, n, n, n)``."""
        return np.stack(np.broadcast_arrays(*self.wavevector)).astype(float)

    @cached_property
    def kabs(self):
        k1, k2, k3 = self.wavevector
        return np.sqrt(k1**2 + k2**2 + k3**2)

    @cached_property
    def khabs(self):
        k1, k2, _ = self.wavevector
        return np.broadcast_to(np.sqrt(k1**2 + k2**2), self.shape)

    @cached_property
    def nyquist_free(self):
        """Boolean mask, False on the Nyquist planes."""
        half = self.n // 2
        m1, m2, m3 = self.index_vectors
        return (np.abs(m1) != half) & (np.abs(m2) != half) & (np.abs(m3) != half)

    @cached_property
    def off_axis(self):
        """Boolean mask of retained modes with ``xi_h != 0`` and off the Nyquist planes."""
        return (self.khabs > 0) & self.nyquist_free

    @cached_property
    def dealias_mask(self):
        """True where a coefficient survives the 2/3 rule."""
        m1, m2, m3 = self.index_vectors
        cut = self.n / 3.0
        return (np.abs(m1) <= cut) & (np.abs(m2) <= cut) & (np.abs(m3) <= cut)

    @cached_property
    def negation_index(self):
        """Index permutation realizing ``xi -> -xi`` along one axis."""
        return (-np.arange(self.n)) % self.n

    def symbol(self, tag):
        """Elementary symbol evaluated on the grid, zero on the Nyquist planes."""
        return _grid_symbol(self, tag)


def elementary_symbol(tag, k1, k2, k3):
    """Evaluate an elementary single-variable symbol at wavevectors ``(k1, k2, k3)``.

    Tags: ``one``, ``riesz1``..``riesz3`` (xi_i/|xi|), ``rieszh1``, ``rieszh2``
    (xi_j/|xi_h|), ``sqrt1ml2`` (|xi_h|/|xi|), ``lambda`` (xi_3/|xi|), ``absxi``.
    Values at ``xi = 0`` and on the axis follow the module conventions.
    """
    k1, k2, k3 = np.broadcast_arrays(*(np.asarray(k, dtype=float) for k in (k1, k2, k3)))
    kh = np.hypot(k1, k2)
    k = np.sqrt(kh**2 + k3**2)
    if tag == "one":
        return np.ones_like(k)
    if tag == "absxi":
        return k
    if tag in ("riesz1", "riesz2", "riesz3", "lambda", "sqrt1ml2"):
        num = {"riesz1": k1, "riesz2": k2, "riesz3": k3, "lambda": k3, "sqrt1ml2": kh}[tag]
        return _safe_ratio(num, k)
    if tag in ("rieszh1", "rieszh2"):
        return _safe_ratio(k1 if tag == "rieszh1" else k2, kh)
    raise ValueError(f"unknown symbol tag {tag!r}")


def _safe_ratio(num, den):
    out = np.zeros(np.broadcast(num, den).shape)
    nz = np.broadcast_to(den > 0, out.shape)
    num = np.broadcast_to(num, out.shape)
    den = np.broadcast_to(den, out.shape)
    out[nz] = num[nz] / den[nz]
    return out


_SYMBOL_CACHE = {}


def _grid_symbol(grid, tag):
    key = (grid, tag)
    if key not in _SYMBOL_CACHE:
        values = np.broadcast_to(elementary_symbol(tag, *grid.wavevector), grid.shape)
        values = np.where(grid.nyquist_free, values, 0.0)
        values.setflags(write=False)
        _SYMBOL_CACHE[key] = values
    return _SYMBOL_CACHE[key]


@dataclass(frozen=True, eq=False)
class PhysicalField:
    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise ValueError("physical field contains non-finite values")
        object.__setattr__(self, "samples", samples)

    def norm(self):
        return float(np.sqrt(np.mean(self.samples**2)))


@dataclass(frozen=True, eq=False)
class SpectralField:
    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != self.grid.shape:
            raise ValueError(f"expected shape {self.grid.shape}, got {coeffs.shape}")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    def __add__(self, other):
        return SpectralField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectralField(self.grid, self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def norm(self):
        return float(np.linalg.norm(self.coeffs.ravel()))


@dataclass(frozen=True, eq=False)
class SpectralVectorField:
    """Three spectral components stored as one ``(3, n, n, n)`` array."""

    grid: Grid
    coeffs: np.ndarray
    divergence_free: bool = field(default=False)

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if coeffs.shape != (3,) + self.grid.shape:
            raise ValueError(f"expected shape {(3,) + self.grid.shape}, got {coeffs.shape}")
        object.__setattr__(self, "coeffs", coeffs)
        if self.divergence_free:
            residual = divergence_residual(self)
            if residual > DIVERGENCE_TOL:
                raise ValueError(f"field flagged divergence-free has residual {residual:.3e}")

    @classmethod
    def from_components(cls, u1, u2, u3, divergence_free=False):
        return cls(u1.grid, np.stack([u1.coeffs, u2.coeffs, u3.coeffs]), divergence_free)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((3,) + grid.shape, dtype=complex), True)

    @property
    def components(self):
        return tuple(SpectralField(self.grid, c) for c in self.coeffs)

    def __add__(self, other):
        return SpectralVectorField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectralVectorField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return SpectralVectorField(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def norm(self):
        return float(np.linalg.norm(self.coeffs.ravel()))


def forward_transform(f):
    """Coefficients ``F`` with ``f(x) = sum F(xi) exp(i xi.x)``."""
    n = f.grid.n
    return SpectralField(f.grid, fftn(f.samples) / n**3)


def hermitian_defect(coeffs, grid):
    """Max of ``|F(-xi) - conj F(xi)|`` relative to ``max |F|``."""
    neg = grid.negation_index
    mirrored = coeffs[..., neg, :, :][..., :, neg, :][..., :, :, neg]
    scale = np.max(np.abs(coeffs))
    if scale == 0:
        return 0.0
    return float(np.max(np.abs(mirrored - np.conj(coeffs))) / scale)


def inverse_transform(F):
    """Real samples of a Hermitian-symmetric spectral field."""
    defect = hermitian_defect(F.coeffs, F.grid)
    if defect > HERMITIAN_TOL:
        raise ValueError(f"coefficients are not Hermitian symmetric (defect {defect:.3e})")
    n = F.grid.n
    return PhysicalField(F.grid, np.real(ifftn(F.coeffs)) * n**3)


def to_physical(coeffs, grid):
    """Complex samples for coefficient arrays with any leading shape."""
    return ifftn(coeffs) * grid.n**3


def to_spectral(samples, grid):
    return fftn(samples) / grid.n**3


def apply_symbol(F, s):
    """Multiply coefficients by a symbol given as an array or a callable ``s(k1, k2, k3)``."""
    values = s(*F.grid.wavevector) if callable(s) else s
    values = np.broadcast_to(np.asarray(values), F.grid.shape)
    if not np.all(np.isfinite(values)):
        raise ValueError("symbol is not finite on the grid")
    return SpectralField(F.grid, F.coeffs * values)


def zero_nyquist(F):
    return SpectralField(F.grid, np.where(F.grid.nyquist_free, F.coeffs, 0))


def dealias(F):
    """Zero every coefficient with some ``|xi_i| > (2/3) (pi n / L)``."""
    return SpectralField(F.grid, np.where(F.grid.dealias_mask, F.coeffs, 0))


def dealias_vector(u):
    return SpectralVectorField(u.grid, np.where(u.grid.dealias_mask, u.coeffs, 0))


def leray_project(u):
    """Orthogonal projection onto divergence-free fields; the zero mode passes through."""
    grid = u.grid
    k = grid.k_full
    k2 = grid.kabs**2
    dot = np.einsum("i...,i...->...", k, u.coeffs)
    with np.errstate(invalid="ignore", divide="ignore"):
        factor = np.where(k2 > 0, dot / np.where(k2 > 0, k2, 1), 0)
    return SpectralVectorField(grid, u.coeffs - k * factor)


def divergence_residual(u):
    """``max |xi . u(xi)|`` relative to ``max |xi| |u(xi)|``.

    Normalized by the field rather than mode by mode: a projected mode at
    rounding level can otherwise report an order-one ratio.
    """
    grid = u.grid
    dot = np.abs(np.einsum("i...,i...->...", grid.k_full, u.coeffs))
    scale = np.max(grid.kabs * np.sqrt(np.sum(np.abs(u.coeffs) ** 2, axis=0)))
    if scale == 0:
        return 0.0
    return float(np.max(dot) / scale)


def gradient(F):
    grid = F.grid
    ik = 1j * grid.k_full * grid.nyquist_free
    return SpectralVectorField(grid, ik * F.coeffs)


def divergence(u):
    grid = u.grid
    ik = 1j * grid.k_full * grid.nyquist_free
    return SpectralField(grid, np.sum(ik * u.coeffs, axis=0))


def curl_h(u):
    """Horizontal curl ``d1 u2 - d2 u1``."""
    grid = u.grid
    k1, k2, _ = grid.wavevector
    mask = grid.nyquist_free
    return SpectralField(grid, 1j * (k1 * u.coeffs[1] - k2 * u.coeffs[0]) * mask)


def partial3(F):
    return SpectralField(F.grid, 1j * F.grid.wavevector[2] * F.grid.nyquist_free * F.coeffs)


def abs_grad(F, power=1):
    """``|grad|^power``; negative powers vanish at ``xi = 0``."""
    return SpectralField(F.grid, _power_symbol(F.grid.kabs, power, F.grid) * F.coeffs)


def abs_grad_h(F, power=1):
    """``|grad_h|^power``; negative powers vanish on the axis."""
    return SpectralField(F.grid, _power_symbol(F.grid.khabs, power, F.grid) * F.coeffs)


def _power_symbol(mag, power, grid):
    with np.errstate(divide="ignore"):
        values = np.where(mag > 0, np.power(np.where(mag > 0, mag, 1.0), power), 0.0)
    return values * grid.nyquist_free


def lambda_op(F):
    """The skew operator ``d3 |grad|^-1`` with symbol ``i Lambda``."""
    return SpectralField(F.grid, 1j * F.grid.symbol("lambda") * F.coeffs)


def laplacian(F):
    return SpectralField(F.grid, -(F.grid.kabs**2) * F.grid.nyquist_free * F.coeffs)


def real_field_from_physical(grid, samples):
    return forward_transform(PhysicalField(grid, samples))
