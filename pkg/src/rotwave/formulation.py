"""Changes of unknowns between velocity, the scalar pair (a, c), the
dispersive pair (U+, U-) and profiles, plus axisymmetric data generation.

On the Fourier side

    a^ = i (xi_1 u^_2 - xi_2 u^_1) / |xi_h|,     c^ = |xi| u^_3 / |xi_h|,

and the velocity is recovered as ``u = U_a + U_c`` with
``U_a = -grad_h^perp |grad_h|^-1 a``, ``U_c^j = Lam |grad_h|^-1 d_j c`` and
``U_c^3 = sqrt(1 - Lambda^2) c``.  Axis modes (``xi_h = 0``) are dropped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    SpectralField,
    SpectralVectorField,
    divergence_residual,
)

DIVERGENCE_REJECT = 1e-10


@dataclass(frozen=True, eq=False)
class ScalarPair:
    a: SpectralField
    c: SpectralField

    @property
    def grid(self):
        return self.a.grid


@dataclass(frozen=True, eq=False)
class DispersivePair:
    plus: SpectralField
    minus: SpectralField

    @property
    def grid(self):
        return self.plus.grid


@dataclass(frozen=True, eq=False)
class ProfilePair:
    plus: SpectralField
    minus: SpectralField
    time: float

    @property
    def grid(self):
        return self.plus.grid


def _inv_kh(grid):
    kh = grid.khabs
    return np.where(grid.off_axis, 1.0 / np.where(kh > 0, kh, 1.0), 0.0)


def velocity_to_scalars(u):
    """``(a, c)`` of a divergence-free velocity; rejects divergent input."""
    residual = divergence_residual(u)
    if residual > DIVERGENCE_REJECT:
        raise ValueError(f"velocity is not divergence free (residual {residual:.3e})")
    a, c = velocity_to_scalar_arrays(u.coeffs, u.grid)
    return ScalarPair(SpectralField(u.grid, a), SpectralField(u.grid, c))


def velocity_to_scalar_arrays(coeffs, grid):
    k1, k2, _ = grid.wavevector
    inv_kh = _inv_kh(grid)
    a = 1j * (k1 * coeffs[1] - k2 * coeffs[0]) * inv_kh
    c = grid.kabs * coeffs[2] * inv_kh
    return a, c


def scalars_to_velocity(s):
    coeffs = scalar_arrays_to_velocity(s.a.coeffs, s.c.coeffs, s.grid)
    return SpectralVectorField(s.grid, coeffs, divergence_free=True)


def scalar_arrays_to_velocity(a, c, grid):
    k1, k2, _ = grid.wavevector
    inv_kh = _inv_kh(grid)
    lam = grid.symbol("lambda")
    sin = grid.symbol("sqrt1ml2")
    a = a * grid.off_axis
    c = c * grid.off_axis
    u1 = 1j * k2 * inv_kh * a - lam * k1 * inv_kh * c
    u2 = -1j * k1 * inv_kh * a - lam * k2 * inv_kh * c
    u3 = sin * c
    return np.stack([u1, u2, u3])


def parseval_split_check(u, m):
    """Compare ``||m u||^2`` with ``||m a||^2 + ||m c||^2``.

    ``m`` is a real symbol array on the grid or a callable of the wavevector.
    Returns ``(lhs, rhs, relerr)``.
    """
    grid = u.grid
    values = m(*grid.wavevector) if callable(m) else m
    values = np.broadcast_to(np.asarray(values), grid.shape)
    s = velocity_to_scalars(u)
    lhs = float(np.sum(np.abs(values * u.coeffs) ** 2))
    rhs = float(np.sum(np.abs(values * s.a.coeffs) ** 2) + np.sum(np.abs(values * s.c.coeffs) ** 2))
    scale = max(abs(lhs), abs(rhs))
    relerr = 0.0 if scale == 0 else abs(lhs - rhs) / scale
    return lhs, rhs, relerr


def to_dispersive(s):
    return DispersivePair(s.a + s.c, s.a - s.c)


def from_dispersive(d):
    return ScalarPair(0.5 * (d.plus + d.minus), 0.5 * (d.plus - d.minus))


def semigroup_factor(grid, t, sign):
    """``exp(sign * i t Lambda(xi))`` on the grid."""
    return np.exp(sign * 1j * t * grid.symbol("lambda"))


def to_profiles(d, t):
    """Profiles ``P+ = exp(-i t Lambda) U+`` and ``P- = exp(i t Lambda) U-``."""
    grid = d.grid
    return ProfilePair(
        SpectralField(grid, semigroup_factor(grid, t, -1) * d.plus.coeffs),
        SpectralField(grid, semigroup_factor(grid, t, +1) * d.minus.coeffs),
        float(t),
    )


def from_profiles(pp):
    grid = pp.grid
    return DispersivePair(
        SpectralField(grid, semigroup_factor(grid, pp.time, +1) * pp.plus.coeffs),
        SpectralField(grid, semigroup_factor(grid, pp.time, -1) * pp.minus.coeffs),
    )


def ring_ids(grid):
    """Integer ring labels from exact ``(m1^2 + m2^2, m3)``."""
    m1, m2, m3 = grid.index_vectors
    r2 = np.broadcast_to(m1**2 + m2**2, grid.shape)
    m3 = np.broadcast_to(m3, grid.shape)
    return r2, m3


def make_axisymmetric_data(grid, seed, k0, width, amplitude, rings=None, max_index=None):
    """Random ring-constant ``(a, c)`` with a Gaussian radial envelope.

    Every mode with the same ``(m1^2 + m2^2, m3)`` gets the same coefficient,
    with ``c^(r, -m3) = conj c^(r, m3)`` so that the fields are real.  The
    velocity RMS is scaled to ``amplitude``.  ``rings`` restricts the allowed
    values of ``m1^2 + m2^2``; ``max_index`` band-limits every index component.
    """
    rng = np.random.default_rng(seed)
    r2, m3 = ring_ids(grid)
    m1, m2, m3v = grid.index_vectors
    keep = grid.off_axis & grid.dealias_mask
    if max_index is not None:
        keep &= (np.abs(m1) <= max_index) & (np.abs(m2) <= max_index) & (np.abs(m3v) <= max_index)
    if rings is not None:
        keep &= np.isin(r2, np.asarray(list(rings)))
    envelope = np.exp(-0.5 * ((grid.kabs - k0) / width) ** 2)

    labels = sorted({(int(r), int(abs(z))) for r, z in zip(r2[keep], m3[keep])})
    fields = []
    for _ in range(2):
        table = {}
        for r, z in labels:
            value = rng.standard_normal() + 1j * rng.standard_normal()
            table[(r, z)] = value.real + 0j if z == 0 else value
        coeffs = np.zeros(grid.shape, dtype=complex)
        idx = np.nonzero(keep)
        for i, j, l in zip(*idx):
            r, z = int(r2[i, j, l]), int(m3[i, j, l])
            value = table[(r, abs(z))]
            coeffs[i, j, l] = value if z >= 0 else np.conj(value)
        fields.append(coeffs * envelope)
    a, c = fields
    energy = np.sum(np.abs(a) ** 2) + np.sum(np.abs(c) ** 2)
    scale = 0.0 if energy == 0 or amplitude == 0 else amplitude / np.sqrt(energy)
    return ScalarPair(SpectralField(grid, a * scale), SpectralField(grid, c * scale))


def rotate_quarter(coeffs, grid):
    """Vector field rotated by 90 degrees about the vertical axis.

    ``v(x) = R^T u(R x)`` with ``R (x1, x2, x3) = (-x2, x1, x3)``, so that
    ``v^(zeta) = R^T u^(R zeta)``.
    """
    n = grid.n
    idx = np.arange(n)
    neg = (-idx) % n
    # u^(R zeta) with R zeta = (-zeta2, zeta1, zeta3): output[i, j] = input[-j, i]
    moved = coeffs[:, neg[:, None], idx[None, :], :]
    moved = np.swapaxes(moved, 1, 2)
    out = np.empty_like(moved)
    out[0] = moved[1]
    out[1] = -moved[0]
    out[2] = moved[2]
    return out


def axisymmetry_deviation(u):
    """Relative L2 change of ``u`` under the exact quarter-turn about ``e3``."""
    grid = u.grid
    if grid.n % 4:
        raise ValueError("quarter-turn test needs n divisible by 4")
    norm = np.linalg.norm(u.coeffs.ravel())
    if norm == 0:
        return 0.0
    return float(np.linalg.norm((rotate_quarter(u.coeffs, grid) - u.coeffs).ravel()) / norm)


def random_divergence_free(grid, rng, max_index=None):
    """Real, mean-free, divergence-free random velocity with the axis modes removed."""
    from .spectral import leray_project

    noise = rng.standard_normal((3,) + grid.shape)
    coeffs = np.stack([np.fft.fftn(c) / grid.n**3 for c in noise])
    keep = grid.off_axis
    if max_index is not None:
        m1, m2, m3 = grid.index_vectors
        keep = keep & (np.abs(m1) <= max_index) & (np.abs(m2) <= max_index) & (np.abs(m3) <= max_index)
    u = leray_project(SpectralVectorField(grid, coeffs * keep))
    return SpectralVectorField(grid, u.coeffs * keep, divergence_free=True)


def single_ring_state(grid, seed, amplitude=0.05, ring=25, max_index=5):
    """Axisymmetric data on the one horizontal ring ``m1^2 + m2^2 = ring``."""
    return make_axisymmetric_data(grid, seed, k0=0.25, width=0.1, amplitude=amplitude, rings=[ring], max_index=max_index)
