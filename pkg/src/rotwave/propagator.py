"""The linear group ``exp(i t Lambda)`` on the periodic grid and, for
axisymmetric data on R^3, by quadrature in Fourier spherical coordinates.

Conventions for the continuum path: ``f(x) = (2 pi)^-3 int f^(xi) e^{i x.xi} dxi``
and ``||f||_2^2 = (2 pi)^-3 int |f^|^2 dxi``.  An axisymmetric ``f^`` is
stored as values on a Gauss-Legendre tensor grid in ``rho = |xi|`` and
``Lambda = xi_3/|xi|``; the azimuthal integral is done exactly through ``J_0``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import legendre as npleg
from scipy.special import j0

from .bands import BandIndex, admissible, band_ranges, band_weight_polar, enumerate_bands, phi
from .spectral import SpectralField

TWO_PI = 2.0 * math.pi
NODES_PER_PERIOD = 6
RESOLUTION_TAIL = 1e-6


class QuadratureResolutionWarning(UserWarning):
    """Too few quadrature nodes per oscillation period."""


# Bessel J0 -------------------------------------------------------------------

_SERIES_TERMS = 60
_ASYMPTOTIC_TERMS = 24


def _j0_series(x):
    q = -0.25 * x * x
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, _SERIES_TERMS):
        term = term * q / (k * k)
        total = total + term
    return total


def _j0_miller(x):
    """Backward recurrence normalized by ``J_0 + 2 sum_k J_2k = 1``."""
    start = int(np.max(x)) + 40
    start += start % 2
    j_next = np.zeros_like(x)
    j_cur = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    for n in range(start, 0, -1):
        if n % 2 == 0:
            norm = norm + 2.0 * j_cur
        j_next, j_cur = j_cur, (2.0 * n / x) * j_cur - j_next
        if np.any(np.abs(j_cur) > 1e200):
            j_next, j_cur, norm = j_next * 1e-200, j_cur * 1e-200, norm * 1e-200
    return j_cur / (j_cur + norm)


def _asymptotic_coefficients(count):
    coeffs = [1.0]
    for k in range(1, count):
        coeffs.append(coeffs[-1] * (2 * k - 1) ** 2 / (k * 8.0))
    return coeffs


_HANKEL = _asymptotic_coefficients(2 * _ASYMPTOTIC_TERMS)


def _j0_asymptotic(x):
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    inv = 1.0 / x
    for k in range(_ASYMPTOTIC_TERMS):
        sign = -1.0 if k % 2 else 1.0
        p = p + sign * _HANKEL[2 * k] * inv ** (2 * k)
        q = q + sign * _HANKEL[2 * k + 1] * inv ** (2 * k + 1)
    chi = x - 0.25 * math.pi
    return np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) + q * np.sin(chi))


def bessel_j0(x):
    """Bessel function of the first kind, order zero.

    Power series below 8, Miller's backward recurrence up to 25 and the
    Hankel asymptotic expansion beyond.  The quadrature tables use
    ``scipy.special.j0`` instead, which is several times faster on large
    arrays; the two agree to about 1e-14.
    """
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    small = x < 8.0
    large = x >= 25.0
    middle = ~small & ~large
    if np.any(small):
        out[small] = _j0_series(x[small])
    if np.any(middle):
        out[middle] = _j0_miller(x[middle])
    if np.any(large):
        out[large] = _j0_asymptotic(x[large])
    return out[()] if out.ndim == 0 else out


# quadrature grid and profiles ------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuadratureGrid2D:
    rho_min: float
    rho_max: float
    n_rho: int = 256
    n_lam: int = 512

    def __post_init__(self):
        if not (0.0 <= self.rho_min < self.rho_max):
            raise ValueError("need 0 <= rho_min < rho_max")
        if self.n_rho < 2 or self.n_lam < 2:
            raise ValueError("need at least two nodes per direction")

    @classmethod
    def for_band(cls, k, n_rho=256, n_lam=512):
        """The default grid ``[0, 8 * 2^k]``."""
        return cls(0.0, 8.0 * 2.0**k, n_rho, n_lam)

    @cached_property
    def _rho_rule(self):
        x, w = npleg.leggauss(self.n_rho)
        half = 0.5 * (self.rho_max - self.rho_min)
        return self.rho_min + half * (x + 1.0), half * w

    @cached_property
    def _lam_rule(self):
        return npleg.leggauss(self.n_lam)

    @property
    def rho(self):
        return self._rho_rule[0]

    @property
    def rho_weights(self):
        return self._rho_rule[1]

    @property
    def lam(self):
        return self._lam_rule[0]

    @property
    def lam_weights(self):
        return self._lam_rule[1]

    @cached_property
    def measure(self):
        """``rho^2 drho dLambda`` weights on the tensor grid (no azimuthal factor)."""
        return (self.rho_weights * self.rho**2)[:, None] * self.lam_weights[None, :]

    @cached_property
    def sin(self):
        return np.sqrt(np.clip(1.0 - self.lam**2, 0.0, None))

    @staticmethod
    def _unit_rule(n):
        return npleg.leggauss(n)

    @cached_property
    def _rho_analysis(self):
        return _legendre_analysis(*self._unit_rule(self.n_rho))

    @cached_property
    def _lam_analysis(self):
        return _legendre_analysis(*self._unit_rule(self.n_lam))


def _legendre_analysis(nodes, weights):
    """Matrix taking nodal values to Legendre coefficients (exact for degree < n)."""
    n = len(nodes)
    vander = npleg.legvander(nodes, n - 1)
    return (vander * weights[:, None]).T * ((2 * np.arange(n) + 1) / 2.0)[:, None]


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Axisymmetric Fourier data ``f^(rho, Lambda)`` on a quadrature grid."""

    grid: QuadratureGrid2D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.n_rho, self.grid.n_lam):
            raise ValueError("profile values must have shape (n_rho, n_lam)")
        if not np.all(np.isfinite(values)):
            raise ValueError("profile values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, grid, func):
        return cls(grid, func(grid.rho[:, None], grid.lam[None, :]))

    @property
    def rho(self):
        return self.grid.rho

    @property
    def lam(self):
        return self.grid.lam

    def __mul__(self, scalar):
        return RadialProfile(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def conjugate_symmetry_defect(self):
        """``max |f(rho, -Lambda) - conj f(rho, Lambda)|``; the nodes are symmetric."""
        return float(np.max(np.abs(self.values[:, ::-1] - np.conj(self.values)), initial=0.0))

    def apply_S(self):
        """``rho d/drho``, differentiating the truncated Legendre series exactly."""
        g = self.grid
        coeffs = _trim(self.legendre_coefficients(), axis=0)
        deriv = npleg.legder(coeffs, axis=0)
        # rho d/drho = (rho_min / h + 1 + x) d/dx on the reference interval
        offset = 2.0 * g.rho_min / (g.rho_max - g.rho_min) + 1.0
        shifted = offset * np.pad(deriv, ((0, 1), (0, 0))) + _times_x(deriv)
        values = npleg.legvander(g._unit_rule(g.n_rho)[0], shifted.shape[0] - 1) @ shifted
        values = values @ npleg.legvander(g.lam, coeffs.shape[1] - 1).T
        return RadialProfile(g, values)

    def apply_Upsilon(self):
        """``-sqrt(1 - Lambda^2) d/dLambda``."""
        g = self.grid
        coeffs = _trim(self.legendre_coefficients(), axis=1)
        deriv = npleg.legder(coeffs, axis=1)
        values = npleg.legvander(g._unit_rule(g.n_rho)[0], coeffs.shape[0] - 1) @ deriv
        values = values @ npleg.legvander(g.lam, deriv.shape[1] - 1).T
        return RadialProfile(g, -g.sin[None, :] * values)

    def resampled(self, rho_min, rho_max, n_rho, n_lam):
        """The same profile, re-evaluated from its Legendre series on a new grid.

        ``[rho_min, rho_max]`` must lie inside the current radial interval.
        """
        g = self.grid
        if rho_min < g.rho_min or rho_max > g.rho_max:
            raise ValueError("resampling interval must lie inside the current grid")
        new = QuadratureGrid2D(rho_min, rho_max, n_rho, n_lam)
        coeffs = self.legendre_coefficients()
        x = (new.rho - g.rho_min) / (0.5 * (g.rho_max - g.rho_min)) - 1.0
        values = npleg.legvander(x, coeffs.shape[0] - 1) @ coeffs @ npleg.legvander(new.lam, coeffs.shape[1] - 1).T
        return RadialProfile(new, values)

    def series_degrees(self, cutoff=1e-13):
        """Highest Legendre degrees in ``rho`` and ``Lambda`` above ``cutoff`` of the peak."""
        coeffs = np.abs(self.legendre_coefficients())
        peak = np.max(coeffs)
        if peak == 0:
            return 0, 0
        live = coeffs > cutoff * peak
        return int(np.nonzero(live.any(axis=1))[0][-1]), int(np.nonzero(live.any(axis=0))[0][-1])

    def legendre_coefficients(self):
        return self.grid._rho_analysis @ self.values @ self.grid._lam_analysis.T

    def resolution_tail(self):
        """Largest coefficient in the top tenth of the Legendre spectrum in either
        direction, relative to the peak coefficient."""
        coeffs = self.legendre_coefficients()
        peak = np.max(np.abs(coeffs))
        if peak == 0:
            return 0.0
        tail_r = max(1, self.grid.n_rho // 10)
        tail_l = max(1, self.grid.n_lam // 10)
        tail = max(np.max(np.abs(coeffs[-tail_r:, :])), np.max(np.abs(coeffs[:, -tail_l:])))
        return float(tail / peak)


SERIES_NOISE = 1e-10


def _times_x(coeffs):
    """Multiply Legendre series (along axis 0) by ``x``: ``x P_n = ((n+1) P_{n+1} + n P_{n-1}) / (2n+1)``."""
    n = np.arange(coeffs.shape[0])[:, None]
    out = np.zeros((coeffs.shape[0] + 1,) + coeffs.shape[1:], dtype=coeffs.dtype)
    out[1:] += coeffs * (n + 1) / (2 * n + 1)
    out[:-2] += (coeffs * n / (2 * n + 1))[1:]
    return out


def _trim(coeffs, axis):
    """Zero the rounding-level coefficients so derivatives do not amplify them."""
    peak = np.max(np.abs(coeffs))
    if peak == 0:
        return coeffs
    return np.where(np.abs(coeffs) > SERIES_NOISE * peak, coeffs, 0.0)


def semigroup_profile(f, t, sign=1):
    """``exp(sign i t Lambda) f^`` on the quadrature grid."""
    return RadialProfile(f.grid, np.exp(sign * 1j * t * f.lam)[None, :] * f.values)


def quadrature_l2(f, weight=None):
    """``||f||_2`` from the profile, optionally with a multiplier ``weight``."""
    values = f.values if weight is None else weight * f.values
    total = TWO_PI * np.sum(f.grid.measure * np.abs(values) ** 2) / TWO_PI**3
    return float(math.sqrt(total))


SUPPORT_CUTOFF = 1e-13


def effective_rho_range(f):
    """Radial range outside which ``|f^|`` is below ``SUPPORT_CUTOFF`` of its peak."""
    radial = np.max(np.abs(f.values), axis=1)
    peak = np.max(radial)
    if peak == 0:
        return f.grid.rho_min, f.grid.rho_min
    idx = np.nonzero(radial > SUPPORT_CUTOFF * peak)[0]
    return float(f.rho[idx[0]]), float(f.rho[idx[-1]])


def oscillation_nodes(f, t, x_tilde, z):
    """Quadrature nodes per oscillation period in ``Lambda`` and in ``rho``.

    Frequencies are bounded on the effective radial support of ``f``; node
    spacing is taken as the mean spacing of each rule.
    """
    grid = f.grid
    lo, hi = effective_rho_range(f)
    lam_freq = abs(t) + hi * abs(z)
    rho_freq = abs(x_tilde) + abs(z)
    lam_nodes = math.inf if lam_freq == 0 else grid.n_lam * (TWO_PI / lam_freq) / 2.0
    span = max(hi - lo, 0.0)
    rho_nodes = math.inf if rho_freq == 0 or span == 0 else grid.n_rho * (TWO_PI / rho_freq) / span
    return lam_nodes, rho_nodes


def budget_resample(f, t, x_tilde, z, margin=16):
    """``f`` on the smallest grid over its effective radial support that keeps
    ``NODES_PER_PERIOD`` nodes per oscillation up to ``|x_tilde|`` and ``|z|``
    and still carries the profile's own Legendre series."""
    lo, hi = effective_rho_range(f)
    if hi <= lo:
        return f
    deg_rho, deg_lam = f.series_degrees()
    lam_freq = abs(t) + hi * abs(z)
    rho_freq = abs(x_tilde) + abs(z)
    n_lam = max(deg_lam + margin, math.ceil(NODES_PER_PERIOD * lam_freq / math.pi))
    n_rho = max(deg_rho + margin, math.ceil(NODES_PER_PERIOD * rho_freq * (hi - lo) / TWO_PI))
    return f.resampled(lo, hi, n_rho, n_lam + n_lam % 2)


def _check_budget(f, t, x_tilde, z):
    nodes = min(oscillation_nodes(f, t, x_tilde, z))
    if nodes < NODES_PER_PERIOD:
        warnings.warn(
            f"quadrature resolves only {nodes:.1f} nodes per period "
            f"at t={t}, x=({x_tilde}, 0, {z}); increase n_rho/n_lam",
            QuadratureResolutionWarning,
            stacklevel=3,
        )
        return False
    return True


def semigroup_point_eval(f, x_tilde, z, t, sign=1):
    """``(exp(sign i t Lambda) f)(x)`` at ``x = (x_tilde, 0, z)``."""
    return semigroup_eval_many(f, x_tilde, np.atleast_1d(z), t, sign)[0]


def semigroup_eval_many(f, x_tilde, zs, t, sign=1, check=True):
    """Values at ``(x_tilde, 0, z)`` for several heights ``z`` sharing one ``J_0`` table.

    Equally spaced heights advance the vertical phase factor by repeated
    multiplication instead of fresh exponentials.
    """
    grid = f.grid
    zs = np.atleast_1d(np.asarray(zs, dtype=float))
    if check:
        _check_budget(f, t, x_tilde, float(np.max(np.abs(zs), initial=0.0)))
    if x_tilde == 0:
        bessel = 1.0
    else:
        bessel = j0(grid.rho[:, None] * grid.sin[None, :] * abs(x_tilde))
    base = grid.measure * bessel * f.values * np.exp(sign * 1j * t * grid.lam)[None, :]
    rho_lam = grid.rho[:, None] * grid.lam[None, :]
    out = np.empty(zs.shape, dtype=complex)
    steps = np.diff(zs)
    uniform = zs.size > 2 and np.allclose(steps, steps[0], rtol=1e-12, atol=0.0)
    if uniform:
        phase = np.exp(1j * zs[0] * rho_lam)
        advance = np.exp(1j * steps[0] * rho_lam)
        for i in range(zs.size):
            if i:
                phase *= advance
            out[i] = np.sum(base * phase)
        return out / TWO_PI**2
    for i, z in enumerate(zs):
        out[i] = np.sum(base * np.exp(1j * z * rho_lam))
    return out / TWO_PI**2


# D norm ----------------------------------------------------------------------


def profile_bands(grid):
    rho = np.broadcast_to(grid.rho[:, None], (grid.n_rho, grid.n_lam))
    rho = rho[rho > 0].reshape(-1, grid.n_lam) if grid.rho_min == 0 else rho
    lam = np.broadcast_to(grid.lam[None, :], rho.shape)
    sin = np.sqrt(np.clip(1.0 - lam**2, 0.0, None))
    ks, p_min, q_min = band_ranges(rho, rho * sin, rho * np.abs(lam))
    return enumerate_bands(ks, p_min, q_min)


def profile_norm_B(f, bands=None):
    """``sup_b 2^(-p-q/2) ||P_b f||_2`` with the smooth band weights; ``(value, band)``.

    Same weights as the periodic-grid norm, evaluated on the quadrature nodes.
    """
    bands = profile_bands(f.grid) if bands is None else bands
    grid = f.grid
    rho = grid.rho
    lam = grid.lam
    density = grid.measure * np.abs(f.values) ** 2 / TWO_PI**2
    horizontal, vertical = {}, {}
    best, best_band = 0.0, None
    for b in bands:
        radial = phi(np.ldexp(rho, -b.k))
        rows = np.nonzero(radial)[0]
        if rows.size == 0:
            continue
        sl = slice(rows[0], rows[-1] + 1)
        key_h, key_v = (b.p + b.k, sl.start, sl.stop), (b.q + b.k, sl.start, sl.stop)
        if key_h not in horizontal:
            kh2 = (rho[sl] ** 2)[:, None] * (1.0 - lam**2)[None, :]
            horizontal[key_h] = phi(np.ldexp(kh2, -2 * (b.p + b.k)))
        if key_v not in vertical:
            vertical[key_v] = phi(np.ldexp(rho[sl, None] * lam[None, :], -(b.q + b.k)))
        weight = radial[sl, None] * horizontal[key_h] * vertical[key_v]
        value = b.weight_factor * math.sqrt(float(np.sum(weight**2 * density[sl])))
        if value > best:
            best, best_band = value, b
    return best, best_band


@dataclass(frozen=True)
class DNormReport:
    value: float
    terms: tuple  # (||S^a f||_B, ||Upsilon S^a f||_2) for a = 0..3
    tail: float


def d_norm(f, max_s=3, tail_tolerance=RESOLUTION_TAIL, report=False):
    """``max_a ||S^a f||_B + ||Upsilon S^a f||_2`` over ``a <= max_s``.

    Derivatives are Legendre-spectral on the quadrature grid.  Profiles whose
    Legendre tails exceed ``tail_tolerance`` (relative) after any derivative
    are rejected as under-resolved.
    """
    bands = profile_bands(f.grid)
    terms = []
    current = f
    worst_tail = 0.0
    for a in range(max_s + 1):
        if a:
            current = current.apply_S()
        upsilon = current.apply_Upsilon()
        tail = current.resolution_tail()
        worst_tail = max(worst_tail, tail)
        if tail > tail_tolerance:
            raise ValueError(
                f"profile under-resolved after {a} S derivatives (Legendre tail {tail:.2e}); refine the grid"
            )
        terms.append((profile_norm_B(current, bands)[0], quadrature_l2(upsilon)))
    value = max(b + u for b, u in terms)
    if report:
        return DNormReport(value, tuple(terms), worst_tail)
    return value


def s_data(f):
    """The L2 norms ``f``, ``Sf``, ``Uf`` (Upsilon) and ``USf`` used by the Fourier sup bound."""
    sf = f.apply_S()
    return {
        "f": quadrature_l2(f),
        "Sf": quadrature_l2(sf),
        "Uf": quadrature_l2(f.apply_Upsilon()),
        "USf": quadrature_l2(sf.apply_Upsilon()),
    }


# decay study -----------------------------------------------------------------


def band_profile(b, n_rho=256, n_lam=512):
    """Profile equal to the band weight of ``b``, on a grid spanning its radial support.

    The bump edges are steep, so this profile is only suitable for evaluation,
    not for the derivative-based norms.
    """
    if not admissible(b.p, b.q):
        raise ValueError(f"band {b} is not admissible")
    grid = QuadratureGrid2D(2.0 ** (b.k - 1), 2.0 ** (b.k + 1), n_rho, n_lam)
    return RadialProfile.from_function(grid, lambda r, l: band_weight_polar(b, r, l))


def localized_bump(k, lam0, rho_width=0.25, lam_width=0.2, n_rho=256, n_lam=512):
    """Bump at ``|xi| = 2^k`` and ``Lambda = +-lam0``, real in physical space.

    Gaussian in ``rho`` and flat-topped (fourth power) in ``Lambda`` so that
    it is negligible near ``Lambda = 0`` and ``|Lambda| = 1``.

    Widths are relative (``rho_width * 2^k``); the grid spans ``[2^(k-1), 2^(k+1)]``.
    """
    center = 2.0**k
    grid = QuadratureGrid2D(center / 2.0, 2.0 * center, n_rho, n_lam)

    def func(r, l):
        radial = np.exp(-(((r - center) / (rho_width * center)) ** 2))
        angular = np.exp(-(((l - lam0) / lam_width) ** 4)) + np.exp(-(((l + lam0) / lam_width) ** 4))
        return radial * angular

    return RadialProfile.from_function(grid, func)


def radial_gaussian(k=0, n_rho=256, n_lam=512, width=1.0):
    """``exp(-(rho / width)^2)`` on the default grid of band ``k``."""
    grid = QuadratureGrid2D.for_band(k, n_rho, n_lam)
    return RadialProfile.from_function(grid, lambda r, l: np.exp(-((r / width) ** 2)) + 0.0 * l)


def horizontal_gaussian(k=0, n_rho=128, n_lam=128):
    """``|xi_h|^2 exp(-|xi|^2)`` rescaled to frequency ``2^k``.

    Smooth on R^3, concentrated near ``|xi| ~ 2^k`` and, unlike a bump kept
    away from ``Lambda = 0``, it carries horizontal frequencies, which feed
    the slowest-decaying part of the solution along the vertical axis.
    """
    scale = 2.0**k
    grid = QuadratureGrid2D(0.0, 6.5 * scale, n_rho, n_lam)
    return RadialProfile.from_function(
        grid, lambda r, l: (r / scale) ** 2 * (1.0 - l * l) * np.exp(-((r / scale) ** 2))
    )


@dataclass
class DecayStudy:
    times: np.ndarray
    sups: np.ndarray
    argmax: list
    slope: float
    constants: np.ndarray
    d_norm: float
    k: int


def default_similarity_grid(radial_extent=1.2, vertical_extent=1.6, n_radial=9, n_vertical=25):
    """Coarse sample points ``(x_tilde / t, z / t)`` covering the group-velocity range."""
    return np.linspace(0.0, radial_extent, n_radial), np.linspace(-vertical_extent, vertical_extent, n_vertical)


def _column_max(f, t, x_tilde, zs):
    values = np.abs(semigroup_eval_many(f, abs(x_tilde), zs, t, check=False))
    i = int(np.argmax(values))
    return float(values[i]), float(zs[i])


def sup_at_time(f, t, similarity=None, refine=True, levels=3, resample=True):
    """``sup_x |exp(i t Lambda) f|`` estimated on sample points.

    A coarse grid in the similarity variables ``x / t`` locates the envelope
    maximum; successively finer local grids (each 7 x 7, shrinking by 3)
    then resolve the oscillating modulus.  With ``resample`` the profile is
    first moved to a grid sized for ``t`` by ``budget_resample``.
    Returns ``(sup, (x_tilde, z))``.
    """
    radial, vertical = default_similarity_grid() if similarity is None else similarity
    scale = max(t, 1.0)
    dx = scale * (radial[1] - radial[0]) if len(radial) > 1 else 1.0
    dz = scale * (vertical[1] - vertical[0]) if len(vertical) > 1 else 1.0
    x_reach = scale * float(np.max(radial)) + dx
    z_reach = scale * float(np.max(np.abs(vertical))) + dz
    if resample:
        f = budget_resample(f, t, x_reach, z_reach)
    _check_budget(f, t, x_reach, z_reach)
    best, best_x = -1.0, (0.0, 0.0)
    for y in radial:
        value, z = _column_max(f, t, y * scale, vertical * scale)
        if value > best:
            best, best_x = value, (float(y * scale), z)
    if not refine:
        return best, best_x
    for _ in range(levels):
        x0, z0 = best_x
        for xr in np.unique(np.abs(x0 + np.linspace(-dx, dx, 7))):
            value, z = _column_max(f, t, xr, z0 + np.linspace(-dz, dz, 7))
            if value > best:
                best, best_x = value, (float(xr), z)
        dx, dz = dx / 3.0, dz / 3.0
    return best, best_x


def decay_study(f, k, times, similarity=None, d=None, refine=True):
    """Sup-norm decay of ``exp(i t Lambda) f`` and its log-log slope."""
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        raise ValueError("need at least one time")
    sups, points = [], []
    for t in times:
        s, x = sup_at_time(f, t, similarity, refine)
        sups.append(s)
        points.append(x)
    sups = np.asarray(sups)
    positive = (times > 0) & (sups > 0)
    slope = float(np.polyfit(np.log(times[positive]), np.log(sups[positive]), 1)[0]) if positive.sum() >= 2 else float("nan")
    d = d_norm(f) if d is None else d
    constants = sups * times / (2.0 ** (1.5 * k) * d) if d > 0 else np.full_like(sups, np.nan)
    return DecayStudy(times, sups, points, slope, constants, d, k)


# periodic grid ---------------------------------------------------------------


def semigroup_grid(F, t, sign=1):
    """``exp(sign i t Lambda(xi)) F^`` mode by mode."""
    return SpectralField(F.grid, np.exp(sign * 1j * t * F.grid.symbol("lambda")) * F.coeffs)


__all__ = [
    "BandIndex",
    "DNormReport",
    "DecayStudy",
    "QuadratureGrid2D",
    "QuadratureResolutionWarning",
    "RadialProfile",
    "band_profile",
    "bessel_j0",
    "budget_resample",
    "effective_rho_range",
    "horizontal_gaussian",
    "localized_bump",
    "d_norm",
    "decay_study",
    "oscillation_nodes",
    "profile_norm_B",
    "quadrature_l2",
    "radial_gaussian",
    "s_data",
    "semigroup_eval_many",
    "semigroup_grid",
    "semigroup_point_eval",
    "semigroup_profile",
    "sup_at_time",
]
