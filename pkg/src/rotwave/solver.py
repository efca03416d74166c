"""Time integration of the rotating Euler system on the periodic grid.

Two formulations share the same initial data: plain RK4 on the velocity and an
integrating-factor RK4 on the profiles ``P+- = exp(-+ i t Lambda) U+-`` where
the linear rotation part is integrated exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.fft as sfft

from . import bands
from .formulation import (
    axisymmetry_deviation,
    make_axisymmetric_data,
    scalar_arrays_to_velocity,
    scalars_to_velocity,
    semigroup_factor,
    velocity_to_scalar_arrays,
)
from .multipliers import rhs_dispersive_arrays
from .spectral import SpectralField, SpectralVectorField, fft_workers


def _half(grid, array):
    return array[..., : grid.n // 2 + 1]


def full_from_half(half, grid):
    """Full Hermitian coefficient array from its ``rfftn`` half."""
    n = grid.n
    full = np.empty(half.shape[:-1] + (n,), dtype=complex)
    full[..., : n // 2 + 1] = half
    mirrored = np.conj(np.roll(np.flip(half, axis=(-3, -2)), 1, axis=(-3, -2)))
    full[..., n // 2 + 1 :] = mirrored[..., 1 : n // 2][..., ::-1]
    return full


def _irfft_half(half, grid):
    return sfft.irfftn(half, s=grid.shape, axes=(-3, -2, -1), workers=fft_workers()) * grid.n**3


def _rfft_half(samples, grid):
    return sfft.rfftn(samples, axes=(-3, -2, -1), workers=fft_workers()) / grid.n**3


def _irfft(coeffs, grid):
    """Real samples from full Hermitian coefficient arrays (leading axes allowed)."""
    return _irfft_half(_half(grid, coeffs), grid)


class _HalfOps:
    """Wavevector arrays restricted to the ``rfftn`` half space."""

    _cache = {}

    def __new__(cls, grid):
        if grid not in cls._cache:
            self = super().__new__(cls)
            self.ik = 1j * _half(grid, grid.k_full * grid.nyquist_free)
            self.k = _half(grid, grid.k_full)
            k2 = _half(grid, np.broadcast_to(grid.kabs**2, grid.shape))
            self.inv_k2 = np.where(k2 > 0, 1.0 / np.where(k2 > 0, k2, 1.0), 0.0)
            self.dealias = _half(grid, np.broadcast_to(grid.dealias_mask, grid.shape))
            cls._cache[grid] = self
        return cls._cache[grid]


def _project(coeffs, grid):
    k = grid.k_full
    k2 = grid.kabs**2
    dot = np.einsum("i...,i...->...", k, coeffs)
    factor = np.where(k2 > 0, dot / np.where(k2 > 0, k2, 1.0), 0.0)
    return coeffs - k * factor


_PAIRS = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
_PAIR_INDEX = {pair: i for i, pair in enumerate(_PAIRS)}


def _nonlinear_half(uh, grid, dealias=True):
    ops = _HalfOps(grid)
    u = _irfft_half(uh, grid)
    products = np.empty((6,) + grid.shape)
    for idx, (i, j) in enumerate(_PAIRS):
        np.multiply(u[i], u[j], out=products[idx])
    hat = _rfft_half(products, grid)
    out = np.empty_like(uh)
    for i in range(3):
        out[i] = sum(ops.ik[j] * hat[_PAIR_INDEX[(min(i, j), max(i, j))]] for j in range(3))
    if dealias:
        out *= ops.dealias
    return out


def rhs_velocity_half(uh, grid, rotation_on=True, nonlinear=True, dealias=True):
    """Velocity right-hand side on ``rfftn`` half arrays."""
    ops = _HalfOps(grid)
    force = _nonlinear_half(uh, grid, dealias) if nonlinear else np.zeros_like(uh)
    if rotation_on:
        force[0] -= uh[1]
        force[1] += uh[0]
    dot = np.einsum("i...,i...->...", ops.k, force)
    return ops.k * (dot * ops.inv_k2) - force


def nonlinear_velocity_arrays(coeffs, grid, dealias=True):
    """Fourier coefficients of ``div(u (x) u)`` computed pseudo-spectrally."""
    return full_from_half(_nonlinear_half(_half(grid, coeffs), grid, dealias), grid)


def rhs_velocity_arrays(coeffs, grid, rotation_on=True, nonlinear=True, dealias=True):
    half = rhs_velocity_half(_half(grid, coeffs), grid, rotation_on, nonlinear, dealias)
    return full_from_half(half, grid)


def rhs_velocity(u, rotation_on=True, nonlinear=True, dealias=True):
    """``-P(u . grad u + e3 x u)`` with 2/3-rule dealiasing of the quadratic term."""
    return SpectralVectorField(u.grid, rhs_velocity_arrays(u.coeffs, u.grid, rotation_on, nonlinear, dealias))


def formulation_equivalence_check(u, dealias=True):
    """Relative L2 gap between the two evaluations of ``d/dt (U+, U-)``.

    Route one maps the velocity right-hand side through the (linear) change of
    unknowns; route two evaluates the dispersive system directly.
    """
    grid = u.grid
    du = rhs_velocity_arrays(u.coeffs, grid, rotation_on=True, dealias=dealias)
    da, dc = velocity_to_scalar_arrays(du, grid)
    a, c = velocity_to_scalar_arrays(u.coeffs, grid)
    dp, dm = rhs_dispersive_arrays(a + c, a - c, grid, dealias=dealias)
    route_one = np.stack([da + dc, da - dc]) * grid.off_axis
    route_two = np.stack([dp, dm]) * grid.off_axis
    scale = np.linalg.norm(route_one.ravel())
    diff = np.linalg.norm((route_one - route_two).ravel())
    return 0.0 if scale == 0 else float(diff / scale)


FORMULATIONS = ("velocity", "dispersive")


@dataclass(frozen=True)
class SimConfig:
    n: int = 32
    box_length: float = 2 * math.pi * 16
    dt: float = 0.01
    t_end: float = 1.0
    rotation_on: bool = True
    dealias_on: bool = True
    formulation: str = "velocity"
    stride: int = 10
    snapshot_stride: int = 0
    seed: int = 0
    amplitude: float = 0.05
    k0: float = 0.25
    width: float = 0.1
    max_index: int | None = None
    rings: tuple | None = None  # allowed m1^2 + m2^2 values
    hs: float = 2.0
    nonlinear: bool = True

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_end >= 0:
            raise ValueError("t_end must be nonnegative")
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}")
        if self.stride < 1:
            raise ValueError("stride must be >= 1")

    @property
    def grid(self):
        from .spectral import Grid

        return Grid(self.n, self.box_length)


@dataclass
class State:
    """Solver state at ``time``.

    The velocity formulation stores the ``rfftn`` half of the velocity
    coefficients in ``velocity_half``; the dispersive formulation stores the
    full profile arrays ``plus`` and ``minus``.
    """

    time: float
    velocity_half: np.ndarray | None = None
    plus: np.ndarray | None = None
    minus: np.ndarray | None = None

    @classmethod
    def from_velocity(cls, time, coeffs, grid):
        return cls(time, velocity_half=np.ascontiguousarray(_half(grid, coeffs)))


def velocity_of(state, grid, rotation=1.0):
    """Full velocity coefficients of a state."""
    if state.velocity_half is not None:
        return full_from_half(state.velocity_half, grid)
    up = semigroup_factor(grid, rotation * state.time, +1) * state.plus
    um = semigroup_factor(grid, rotation * state.time, -1) * state.minus
    return scalar_arrays_to_velocity(0.5 * (up + um), 0.5 * (up - um), grid)


def profiles_of(state, grid, rotation=1.0):
    if state.plus is not None:
        return state.plus, state.minus
    a, c = velocity_to_scalar_arrays(velocity_of(state, grid), grid)
    return (
        semigroup_factor(grid, rotation * state.time, -1) * (a + c),
        semigroup_factor(grid, rotation * state.time, +1) * (a - c),
    )


def initial_state(config, scalars=None):
    grid = config.grid
    if scalars is None:
        scalars = make_axisymmetric_data(
            grid, config.seed, config.k0, config.width, config.amplitude, rings=config.rings, max_index=config.max_index
        )
    if config.formulation == "velocity":
        return State.from_velocity(0.0, scalars_to_velocity(scalars).coeffs, grid)
    return State(0.0, plus=(scalars.a + scalars.c).coeffs, minus=(scalars.a - scalars.c).coeffs)


def _rk4(f, t, y, dt):
    k1 = f(t, y)
    k2 = f(t + dt / 2, y + dt / 2 * k1)
    k3 = f(t + dt / 2, y + dt / 2 * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def step(state, dt, config):
    """One RK4 step; integrating factor on the profiles in the dispersive formulation."""
    grid = config.grid
    if config.formulation == "velocity":

        def f(t, y):
            return rhs_velocity_half(y, grid, config.rotation_on, config.nonlinear, config.dealias_on)

        return State(state.time + dt, velocity_half=_rk4(f, state.time, state.velocity_half, dt))

    rotation = 1.0 if config.rotation_on else 0.0
    lam = grid.symbol("lambda")

    def g(t, y):
        if not config.nonlinear:
            return np.zeros_like(y)
        phase = np.exp(1j * rotation * t * lam)
        up, um = phase * y[0], np.conj(phase) * y[1]
        dp, dm = rhs_dispersive_arrays(up, um, grid, nonlinear=True, dealias=config.dealias_on)
        dp -= 1j * lam * up
        dm += 1j * lam * um
        return np.stack([np.conj(phase) * dp, phase * dm])

    y = _rk4(g, state.time, np.stack([state.plus, state.minus]), dt)
    return State(state.time + dt, plus=y[0], minus=y[1])


@dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    energy: float
    h_s: float
    a0: float
    a1: float
    axi_dev: float
    bnorm_plus: float
    bnorm_minus: float
    max_hat: float

    FIELDS = ("t", "energy", "h_s", "a0", "a1", "axi_dev", "bnorm_plus", "bnorm_minus", "max_hat")

    def values(self):
        return tuple(getattr(self, name) for name in self.FIELDS)

    def finite(self):
        return all(math.isfinite(v) for v in self.values())


def grad_sup(coeffs, grid):
    """Grid maximum of the pointwise Frobenius norm of ``grad u``."""
    return _grad_sup_half(_half(grid, coeffs), grid)


def _grad_sup_half(uh, grid):
    ik = _HalfOps(grid).ik
    grads = _irfft_half((ik[:, None] * uh[None, :]).reshape((9,) + uh.shape[1:]), grid)
    return float(np.sqrt(np.max(np.einsum("i...,i...->...", grads, grads))))


def velocity_sup(coeffs, grid):
    u = _irfft(coeffs, grid)
    return float(np.sqrt(np.max(np.sum(u**2, axis=0))))


def diagnostics(state, config):
    grid = config.grid
    rotation = 1.0 if config.rotation_on else 0.0
    u = velocity_of(state, grid, rotation)
    plus, minus = profiles_of(state, grid, rotation)
    t = state.time
    vec = SpectralVectorField(grid, u)
    return DiagnosticsRow(
        t=t,
        energy=float(np.linalg.norm(u.ravel())),
        h_s=float(math.sqrt(sum(bands.norm_sobolev(SpectralField(grid, c), config.hs) ** 2 for c in u))),
        a0=(1 + t) * velocity_sup(u, grid),
        a1=(1 + t) * grad_sup(u, grid),
        axi_dev=axisymmetry_deviation(vec) if grid.n % 4 == 0 else float("nan"),
        bnorm_plus=bands.norm_B(SpectralField(grid, plus))[0],
        bnorm_minus=bands.norm_B(SpectralField(grid, minus))[0],
        max_hat=float(np.max(np.abs(u))),
    )


@dataclass
class SimulationResult:
    rows: list
    healthy: bool
    final: State
    steps: int


def run_simulation(config, state=None, snapshot_writer=None):
    """Step to ``t_end`` emitting diagnostics every ``stride`` steps.

    Stops early and flags the run unhealthy when a state stops being finite.
    ``snapshot_writer(state, step_index)`` is called every ``snapshot_stride`` steps.
    """
    state = initial_state(config) if state is None else state
    nsteps = int(round(config.t_end / config.dt))
    rows = [diagnostics(state, config)]
    healthy = rows[0].finite()
    done = 0
    for i in range(1, nsteps + 1):
        if not healthy:
            break
        with np.errstate(over="ignore", invalid="ignore"):
            state = step(state, config.dt, config)
        done = i
        if not _finite_state(state):
            healthy = False
            break
        if i % config.stride == 0 or i == nsteps:
            row = diagnostics(state, config)
            rows.append(row)
            healthy = row.finite()
        if snapshot_writer is not None and config.snapshot_stride and i % config.snapshot_stride == 0:
            snapshot_writer(state, i)
    return SimulationResult(rows, healthy, state, done)


def _finite_state(state):
    arrays = [a for a in (state.velocity_half, state.plus, state.minus) if a is not None]
    return all(np.all(np.isfinite(a)) for a in arrays)


@dataclass(frozen=True)
class LifespanRow:
    eps: float
    rotation: bool
    seed: int
    t_star: float
    censored: bool


def proxy_lifespan(config, factor, check_stride=1):
    """First time ``||grad u||_inf`` exceeds ``factor`` times its initial value.

    Returns ``(t_star, censored)``; the gradient is checked every
    ``check_stride`` steps, which resolves the crossing time to that many steps.
    """
    grid = config.grid
    state = initial_state(replace(config, formulation="velocity"))
    threshold = factor * _grad_sup_half(state.velocity_half, grid)
    nsteps = int(round(config.t_end / config.dt))
    for i in range(1, nsteps + 1):
        state = step(state, config.dt, replace(config, formulation="velocity"))
        if not _finite_state(state):
            return state.time, False
        if i % check_stride == 0 and _grad_sup_half(state.velocity_half, grid) > threshold:
            return state.time, False
    return config.t_end, True


def lifespan_experiment(eps_values, seeds, template, factor=2.0, check_stride=1, progress=None):
    """Proxy lifespans for every ``(eps, rotation, seed)``; censored runs report ``t_end``."""
    rows = []
    for eps in eps_values:
        for rotation in (True, False):
            for seed in seeds:
                config = replace(template, amplitude=eps, rotation_on=rotation, seed=seed)
                t_star, censored = proxy_lifespan(config, factor, check_stride)
                row = LifespanRow(float(eps), rotation, int(seed), float(t_star), censored)
                rows.append(row)
                if progress is not None:
                    progress(row)
    return rows


def stabilization_votes(rows):
    """Count ``(eps, seed)`` pairs where rotation does not shorten the proxy lifespan.

    A censored time is a lower bound, so a pair is undecided only when both
    runs are censored; such pairs are excluded.  Returns ``(wins, decided)``.
    """
    table = {(r.eps, r.seed, r.rotation): r for r in rows}
    wins = decided = 0
    for (eps, seed, rotation), on in table.items():
        if not rotation:
            continue
        off = table.get((eps, seed, False))
        if off is None or (on.censored and off.censored):
            continue
        decided += 1
        if on.censored or (not off.censored and on.t_star >= off.t_star):
            wins += 1
    return wins, decided


def final_velocity(config, state=None):
    """Velocity coefficients at ``t_end``."""
    result = run_simulation(replace(config, stride=max(1, int(round(config.t_end / config.dt)))), state)
    if not result.healthy:
        raise FloatingPointError("run became unhealthy")
    return velocity_of(result.final, config.grid, 1.0 if config.rotation_on else 0.0)


def richardson_factor(config, state=None):
    """``|u_dt - u_dt/2| / |u_dt/2 - u_dt/4|`` at ``t_end``; about 16 for a 4th-order scheme."""
    runs = [final_velocity(replace(config, dt=config.dt / 2**i), state) for i in range(3)]
    return float(np.linalg.norm((runs[0] - runs[1]).ravel()) / np.linalg.norm((runs[1] - runs[2]).ravel()))
