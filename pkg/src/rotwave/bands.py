"""Smooth bumps, anisotropic dyadic projections and the associated norms.

A band ``(k, p, q)`` localizes ``|xi| ~ 2^k``, ``|xi_h|/|xi| ~ 2^p`` and
``|xi_3|/|xi| ~ 2^q``.  The projector weight is

    phi(2^-k |xi|) * phi(2^-2(p+k) |xi_h|^2) * phi(2^-(q+k) xi_3)

where ``phi(x) = chi(x) - chi(2x)`` is supported in ``1/2 <= |x| <= 2`` and
equals one at ``|x| = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import SpectralField


def smooth_step(t):
    """C-infinity step from 1 at ``t <= 0`` to 0 at ``t >= 1``."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        h0 = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        h1 = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return h1 / (h0 + h1)


def chi(x):
    """Radial bump: 1 for ``|x| <= 1``, 0 for ``|x| >= 2``, nonincreasing in between."""
    return smooth_step(np.abs(np.asarray(x, dtype=float)) - 1.0)


def phi(x):
    """Annular bump ``chi(x) - chi(2x)``; ``sum_k phi(2^-k x) = 1`` for ``x != 0``."""
    x = np.asarray(x, dtype=float)
    return chi(x) - chi(2.0 * x)


def phi_k(x, k):
    return phi(np.ldexp(np.asarray(x, dtype=float), -k))


def phi_pm(x, k, sign):
    """``phi_k`` restricted to the half-line ``sign * x >= 0``."""
    x = np.asarray(x, dtype=float)
    return phi_k(x, k) * (sign * x >= 0)


def phibar(x):
    """Fattened bump equal to one on the support of ``phi``."""
    x = np.asarray(x, dtype=float)
    return chi(x / 2.0) - chi(4.0 * x)


def admissible(p, q):
    """Factor-4 windows on the compatibility of angular indices."""
    ratio = 2.0 ** (2 * p + q) / min(2.0 ** (2 * p), 2.0**q)
    total = 2.0 ** (2 * p) + 2.0**q
    return 2.0**-4 <= ratio <= 2.0**4 and 2.0**-2 <= total <= 2.0**2


@dataclass(frozen=True, order=True)
class BandIndex:
    k: int
    p: int
    q: int

    def __post_init__(self):
        if self.p > 0 or self.q > 0:
            raise ValueError(f"band needs p <= 0 and q <= 0, got {self}")

    @property
    def admissible(self):
        return admissible(self.p, self.q)

    @property
    def weight_factor(self):
        """The B-norm prefactor ``2^(-p - q/2)``."""
        return 2.0 ** (-self.p - self.q / 2.0)


def band_weight(b, k1, k2, k3, bump=phi):
    """Projector weight of band ``b`` at Cartesian wavevectors."""
    k1, k2, k3 = (np.asarray(v, dtype=float) for v in (k1, k2, k3))
    if not admissible(b.p, b.q):
        return np.zeros(np.broadcast(k1, k2, k3).shape)
    kh2 = k1**2 + k2**2
    kabs = np.sqrt(kh2 + k3**2)
    return (
        bump(np.ldexp(kabs, -b.k))
        * bump(np.ldexp(kh2, -2 * (b.p + b.k)))
        * bump(np.ldexp(k3, -(b.q + b.k)))
    )


def band_weight_polar(b, rho, lam, bump=phi):
    """Projector weight at ``|xi| = rho``, ``xi_3/|xi| = lam``."""
    rho = np.asarray(rho, dtype=float)
    lam = np.asarray(lam, dtype=float)
    if not admissible(b.p, b.q):
        return np.zeros(np.broadcast(rho, lam).shape)
    kh2 = rho**2 * (1.0 - lam**2)
    return (
        bump(np.ldexp(rho, -b.k))
        * bump(np.ldexp(kh2, -2 * (b.p + b.k)))
        * bump(np.ldexp(rho * lam, -(b.q + b.k)))
    )


def project_k(F, k):
    return SpectralField(F.grid, phi_k(F.grid.kabs, k) * F.coeffs)


def project_kpq(F, b):
    return SpectralField(F.grid, _grid_band_weight(F.grid, b) * F.coeffs)


def project_kpq_bar(F, b):
    """Projection with the fattened bump in every factor."""
    weight = band_weight(b, *F.grid.wavevector, bump=phibar)
    return SpectralField(F.grid, np.broadcast_to(weight, F.grid.shape) * F.coeffs)


def _log2_range(values):
    values = np.abs(np.asarray(values, dtype=float))
    values = values[values > 0]
    return int(np.floor(np.log2(values.min()))), int(np.ceil(np.log2(values.max())))


def band_ranges(kabs, khabs, k3abs):
    """``(k range, p_min, q_min)`` covering every nonzero wavevector given."""
    kmin, kmax = _log2_range(kabs)
    mask = kabs > 0
    sin_lo, _ = _log2_range(khabs[mask] / kabs[mask])
    cos_lo, _ = _log2_range(k3abs[mask] / kabs[mask])
    return range(kmin - 1, kmax + 2), sin_lo - 1, cos_lo - 1


def enumerate_bands(k_values, p_min, q_min):
    bands = []
    for k in k_values:
        for p in range(p_min, 1):
            for q in range(q_min, 1):
                if admissible(p, q):
                    bands.append(BandIndex(k, p, q))
    return bands


@lru_cache(maxsize=8)
def grid_bands(grid):
    """Admissible bands intersecting the grid's wavenumber range."""
    k1, k2, k3 = (np.broadcast_to(v, grid.shape) for v in grid.wavevector)
    ks, p_min, q_min = band_ranges(grid.kabs, grid.khabs, np.abs(k3))
    return tuple(enumerate_bands(ks, p_min, q_min))


_WEIGHT_CACHE = {}


def _grid_band_weight(grid, b):
    key = (grid, b)
    if key not in _WEIGHT_CACHE:
        if len(_WEIGHT_CACHE) > 4096:
            _WEIGHT_CACHE.clear()
        w = np.broadcast_to(band_weight(b, *grid.wavevector), grid.shape)
        w = np.where(grid.nyquist_free, w, 0.0)
        w.setflags(write=False)
        _WEIGHT_CACHE[key] = w
    return _WEIGHT_CACHE[key]


def band_norms(F, bands=None):
    """``[(band, ||P_b F||_2)]`` over the grid's bands."""
    bands = grid_bands(F.grid) if bands is None else bands
    power = np.abs(F.coeffs) ** 2
    return [(b, float(np.sqrt(np.sum(_grid_band_weight(F.grid, b) ** 2 * power)))) for b in bands]


def norm_B(F, bands=None):
    """Sup over bands of ``2^(-p-q/2) ||P_kpq F||_2``; returns ``(value, argmax band)``."""
    best, best_band = 0.0, None
    for b, value in band_norms(F, bands):
        weighted = b.weight_factor * value
        if weighted > best:
            best, best_band = weighted, b
    return best, best_band


def norm_sobolev(F, s):
    """``(sum (1 + |xi|^2)^s |F|^2)^(1/2)``."""
    weight = (1.0 + F.grid.kabs**2) ** s
    return float(np.sqrt(np.sum(weight * np.abs(F.coeffs) ** 2)))


def norm_Hneg1(F):
    """Homogeneous ``H^-1`` surrogate: weight ``|xi|^-2`` on nonzero modes, the zero mode dropped."""
    kabs = F.grid.kabs
    with np.errstate(divide="ignore"):
        weight = np.where(kabs > 0, 1.0 / np.where(kabs > 0, kabs, 1.0) ** 2, 0.0)
    return float(np.sqrt(np.sum(weight * np.abs(F.coeffs) ** 2)))


@dataclass(frozen=True)
class LinfReport:
    band: BandIndex
    sup_hat: float
    bound: float
    ratio: float


def fourier_linf_check(profile, b, sdata):
    """Ratio of ``sup |P_b f^|`` to the weighted L2 control built from ``sdata``.

    ``profile`` needs ``rho``, ``lam`` node arrays and ``values`` on their tensor
    grid; ``sdata`` maps ``f``, ``Sf``, ``Uf``, ``USf`` to L2 norms.
    """
    weight = band_weight_polar(b, profile.rho[:, None], profile.lam[None, :])
    sup_hat = float(np.max(np.abs(weight * profile.values))) if profile.values.size else 0.0
    bound = 2.0 ** (-1.5 * b.k) * (
        2.0 ** (-b.p) * (sdata["f"] + sdata["Sf"]) + sdata["Uf"] + sdata["USf"]
    )
    ratio = 0.0 if sup_hat == 0 else sup_hat / bound
    return LinfReport(b, sup_hat, bound, ratio)
