"""Verification suites run by ``rotwave verify``.

Each suite returns a list of :class:`Check` rows; a suite passes when every
row passes.  Suites are deterministic given the seed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bands, geometry, multipliers, propagator
from .formulation import (
    DispersivePair,
    axisymmetry_deviation,
    from_dispersive,
    parseval_split_check,
    random_divergence_free,
    scalars_to_velocity,
    single_ring_state,
    to_dispersive,
    velocity_to_scalars,
)
from .solver import formulation_equivalence_check
from .spectral import Grid, SpectralField, divergence_residual, real_field_from_physical

SUITES = ("phase-identities", "formulation", "multipliers", "bands")


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    value: float
    limit: float
    relation: str = "<"  # value must satisfy value <relation> limit

    @property
    def passed(self):
        if not math.isfinite(self.value):
            return False
        if self.relation == "<":
            return self.value < self.limit
        if self.relation == "<=":
            return self.value <= self.limit
        if self.relation == ">=":
            return self.value >= self.limit
        raise ValueError(self.relation)

    def row(self):
        return [self.suite, self.name, repr(float(self.value)), self.relation, repr(float(self.limit)), "pass" if self.passed else "FAIL"]


CHECK_HEADER = ["suite", "check", "value", "relation", "limit", "status"]


def write_checks_csv(path, checks):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CHECK_HEADER)
        for c in checks:
            writer.writerow(c.row())


# phase geometry ---------------------------------------------------------------

PHASE_TOL = 1e-5
ROUNDING_TOL = 1e-12


def first_order_size_ratios(xi, eta, mu, nu):
    """``(|S_eta Phi| + |Omega_eta Phi|) / (|zeta_h| |sigma_bar| / |zeta|^3)`` per sample."""
    first = geometry.vf_first_order(xi, eta, mu, nu)
    zeta = np.asarray(xi) - np.asarray(eta)
    zh = np.hypot(zeta[..., 0], zeta[..., 1])
    rz = np.linalg.norm(zeta, axis=-1)
    sb = np.linalg.norm(geometry.sigma_bar(xi, eta), axis=-1)
    return (np.abs(first["S_eta"]) + np.abs(first["Omega_eta"])) / (zh * sb / rz**3)


def phase_identities_suite(rng, samples=1000, reports_out=None):
    checks = []
    reports = geometry.phase_identity_reports(rng, samples) + geometry.cross_term_reports(rng, samples)
    for r in reports:
        checks.append(Check("phase-identities", f"fd:{r.identity}", r.max_relerr, PHASE_TOL))
    if reports_out is not None:
        reports_out.extend(reports)
    for name, value in geometry.exact_identity_residuals(rng, samples).items():
        checks.append(Check("phase-identities", f"exact:{name}", value, ROUNDING_TOL))

    xi, eta, mu, nu, _ = geometry.random_points(rng, samples)
    ratios = first_order_size_ratios(xi, eta, mu, nu)
    checks.append(Check("phase-identities", "first-order size ratio min", float(np.min(ratios)), 1 / math.sqrt(2), ">="))
    checks.append(Check("phase-identities", "first-order size ratio max", float(np.max(ratios)), 2.0, "<="))
    coeffs = geometry.cross_term_coeffs(xi, eta)
    unit = np.abs(coeffs["omega_c"] ** 2 + coeffs["omega_s"] ** 2 - 1.0)
    checks.append(Check("phase-identities", "omega_c^2 + omega_s^2 = 1", float(np.max(unit)), ROUNDING_TOL))
    zeta = xi - eta
    gamma_ratio = (np.abs(coeffs["Gamma_S"]) + np.abs(coeffs["Gamma_U"])) / (
        2 * np.linalg.norm(xi, axis=-1) / np.linalg.norm(zeta, axis=-1)
    )
    checks.append(Check("phase-identities", "|Gamma_S| + |Gamma_U| over 2|xi|/|xi-eta|", float(np.max(gamma_ratio)), 1.0, "<="))
    scale = rng.uniform(0.1, 10.0, samples)[:, None]
    scale_err = np.abs(geometry.phase(scale * xi, scale * eta, mu, nu) - geometry.phase(xi, eta, mu, nu))
    checks.append(Check("phase-identities", "phase scale invariance", float(np.max(scale_err)), ROUNDING_TOL))

    worst_decomp, worst_comm = 0.0, 0.0
    for _ in range(20):
        func = geometry.polynomial_test_function(rng)
        point = rng.normal(size=3)
        point[:2] += np.sign(point[:2]) * 0.5
        for fd, via in geometry.upsilon_decomposition(point, func).values():
            worst_decomp = max(worst_decomp, float(geometry.relative_error(via, fd)))
        worst_comm = max(worst_comm, float(np.max(geometry.commutator_residual(func, point))))
    checks.append(Check("phase-identities", "spherical decomposition of d/dxi3 and S_h", worst_decomp, 1e-6))
    checks.append(Check("phase-identities", "S and Omega commute", worst_comm, PHASE_TOL))

    study = geometry.phase_vs_sigma_sample(rng)
    checks.append(Check("phase-identities", "small-phase accepted samples", study.accepted, 10_000, ">="))
    checks.append(Check("phase-identities", "small-phase min 2^p_max", study.min_p_max_power, 0.25, ">="))
    checks.append(Check("phase-identities", "small-phase min |sigma_bar| constant", study.min_constant, 2.0**-6, ">="))
    return checks


# formulation ------------------------------------------------------------------

ELEMENTARY_SYMBOLS = ("one", "riesz1", "riesz2", "riesz3", "rieszh1", "rieszh2", "sqrt1ml2", "lambda")


def formulation_suite(rng, fields=20, states=20):
    checks = []
    grid = Grid(16, 2 * math.pi)
    worst_parseval = worst_energy = worst_div = worst_round = 0.0
    for _ in range(fields):
        u = random_divergence_free(grid, rng)
        for tag in ELEMENTARY_SYMBOLS:
            worst_parseval = max(worst_parseval, parseval_split_check(u, grid.symbol(tag))[2])
        s = velocity_to_scalars(u)
        d = to_dispersive(s)
        e_u = u.norm() ** 2
        e_ac = s.a.norm() ** 2 + s.c.norm() ** 2
        e_pm = 0.5 * (d.plus.norm() ** 2 + d.minus.norm() ** 2)
        worst_energy = max(worst_energy, abs(e_u - e_ac) / e_u, abs(e_u - e_pm) / e_u)
        back = scalars_to_velocity(s)
        worst_div = max(worst_div, divergence_residual(back))
        worst_round = max(worst_round, float(np.linalg.norm((back.coeffs - u.coeffs).ravel()) / u.norm()))
    checks.append(Check("formulation", "Parseval splitting over elementary symbols", worst_parseval, 1e-12))
    checks.append(Check("formulation", "energy split u / (a,c) / (U+,U-)", worst_energy, 1e-12))
    checks.append(Check("formulation", "recovered velocity divergence", worst_div, 1e-12))
    checks.append(Check("formulation", "velocity round trip", worst_round, 1e-12))

    grid32 = Grid(32)
    worst_equiv = worst_axi = 0.0
    for _ in range(states):
        seed = int(rng.integers(2**31))
        u = scalars_to_velocity(single_ring_state(grid32, seed, amplitude=float(rng.uniform(0.01, 0.1))))
        worst_axi = max(worst_axi, axisymmetry_deviation(u))
        worst_equiv = max(worst_equiv, formulation_equivalence_check(u))
    checks.append(Check("formulation", "axisymmetric data deviation", worst_axi, 1e-10))
    checks.append(Check("formulation", "velocity vs dispersive right-hand side", worst_equiv, 1e-10))
    return checks


# multipliers ------------------------------------------------------------------

SET_SIZE_TRIPLES = (
    ((1, 0, -1), (1, 0, -1), (0, 0, -1)),
    ((1, 0, 0), (0, 0, 0), (0, 0, 0)),
    ((0, 0, -1), (1, 0, -1), (1, 0, -1)),
    ((1, -1, 0), (1, 0, -1), (0, 0, 0)),
    ((1, 0, -2), (1, 0, -1), (1, 0, -1)),
)
SET_SIZE_KERNELS = ("plus_pm", "minus_mm")
SET_SIZE_LIMIT = 8.0


def band_limited_field(grid, rng, max_index):
    """Random complex coefficients with ``|m_i| <= max_index``, zero mode removed."""
    m1, m2, m3 = grid.index_vectors
    keep = (np.abs(m1) <= max_index) & (np.abs(m2) <= max_index) & (np.abs(m3) <= max_index) & (grid.kabs > 0)
    coeffs = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return SpectralField(grid, coeffs * keep)


def oracle_gap(kernel, f, g):
    """Relative gap between the factored evaluation and the direct double sum."""
    fast = multipliers.q_m(kernel.pipeline, f, g, dealias=False).coeffs * f.grid.nyquist_free
    slow = multipliers.brute_force_q_m(kernel.pipeline, f, g).coeffs
    scale = np.linalg.norm(slow.ravel())
    return 0.0 if scale == 0 else float(np.linalg.norm((fast - slow).ravel()) / scale)


def multipliers_suite(rng, set_size_trials=20):
    checks = []
    kernels = multipliers.build_euler_kernels()
    grid8 = Grid(8, 2 * math.pi)
    for kernel in kernels:
        f, g = band_limited_field(grid8, rng, 2), band_limited_field(grid8, rng, 2)
        checks.append(Check("multipliers", f"pipeline vs double sum: {kernel.name}", oracle_gap(kernel, f, g), 1e-10))

    grid16 = Grid(16, 2 * math.pi)
    worst_imag, worst_slice = 0.0, 0.0
    flat = rng.normal(size=(200, 3))
    xi_flat, eta_flat = flat.copy(), rng.normal(size=(200, 3))
    xi_flat[:, 2] = 0.0
    eta_flat[:, 2] = 0.0
    for kernel in kernels:
        f = real_field_from_physical(grid16, rng.standard_normal(grid16.shape))
        g = real_field_from_physical(grid16, rng.standard_normal(grid16.shape))
        out = multipliers.q_m(kernel.pipeline, f, g).coeffs
        phys = np.fft.ifftn(out) * grid16.n**3
        worst_imag = max(worst_imag, float(np.max(np.abs(phys.imag)) / max(np.max(np.abs(phys.real)), 1e-300)))
        worst_slice = max(worst_slice, float(np.max(np.abs(multipliers.eval_pipeline(kernel.pipeline, xi_flat, eta_flat)))))
    checks.append(Check("multipliers", "real inputs give real outputs", worst_imag, 1e-11))
    checks.append(Check("multipliers", "kernels vanish when xi3 = eta3 = 0", worst_slice, 0.0, "<="))

    grid32 = Grid(32)
    s = single_ring_state(grid32, int(rng.integers(2**31)))
    d = multipliers.rhs_dispersive(to_dispersive(s), check_axisymmetry=False)
    dev = axisymmetry_deviation(scalars_to_velocity(from_dispersive(DispersivePair(*d))))
    checks.append(Check("multipliers", "dispersive right-hand side keeps axisymmetry", dev, 1e-10))

    checks.append(Check("multipliers", "set-size ratio max", set_size_sweep(rng, set_size_trials), SET_SIZE_LIMIT, "<="))
    return checks


def set_size_sweep(rng, trials_per_triple=20):
    """Largest set-size ratio over the preset band triples and two of the Euler kernels."""
    grid = Grid(32, 2 * math.pi * 2)
    kernels = [k for k in multipliers.build_euler_kernels() if k.name in SET_SIZE_KERNELS]
    worst = 0.0
    for out, b1, b2 in SET_SIZE_TRIPLES:
        for kernel in kernels:
            report = multipliers.set_size_check(
                kernel.pipeline, bands.BandIndex(*out), bands.BandIndex(*b1), bands.BandIndex(*b2), trials_per_triple, rng, grid
            )
            worst = max(worst, report.max_ratio)
    return worst


# bands --------------------------------------------------------------------------


def bands_suite(rng):
    checks = []
    x = np.exp(rng.uniform(-20, 20, 1000))
    ks = np.arange(-40, 41)
    total = np.sum(bands.phi(np.ldexp(x[:, None], -ks[None, :])), axis=1)
    checks.append(Check("bands", "partition of unity", float(np.max(np.abs(total - 1))), 1e-12))
    y = rng.uniform(-5, 5, 1000)
    checks.append(Check("bands", "phibar * phi = phi", float(np.max(np.abs(bands.phibar(y) * bands.phi(y) - bands.phi(y)))), 1e-15, "<="))

    grid = Grid(32, 2 * math.pi * 4)
    F = real_field_from_physical(grid, rng.standard_normal(grid.shape))
    F = SpectralField(grid, F.coeffs * (grid.kabs > 0))
    k_values = range(-4, 6)
    summed = sum(bands.project_k(F, k).coeffs for k in k_values)
    checks.append(Check("bands", "sum of annular projections", float(np.linalg.norm((summed - F.coeffs).ravel()) / F.norm()), 1e-12))
    worst_idem = 0.0
    for b in bands.grid_bands(grid)[:40]:
        P = bands.project_kpq(F, b)
        worst_idem = max(worst_idem, float(np.linalg.norm((bands.project_kpq_bar(P, b).coeffs - P.coeffs).ravel()) / max(P.norm(), 1e-300)))
    checks.append(Check("bands", "fattened projector fixes band pieces", worst_idem, 1e-12))

    gap = d_norm_cross_check()
    checks.append(Check("bands", "continuum vs grid B norm, single-band bump", gap, 0.10))
    return checks


def single_band_bump(r, l):
    return np.exp(-(((r - 2.0) / 0.3) ** 2)) * (np.exp(-(((l - 0.55) / 0.12) ** 2)) + np.exp(-(((l + 0.55) / 0.12) ** 2)))


def d_norm_cross_check(box_length=2 * math.pi * 6, n=64):
    """Relative gap between the continuum B norm of a bump and the B norm of
    its samples on a periodic grid (coefficients ``f^(xi) / L^3``)."""
    profile = propagator.RadialProfile.from_function(propagator.QuadratureGrid2D(0.5, 4.0, 256, 512), single_band_bump)
    continuum, _ = propagator.profile_norm_B(profile)
    grid = Grid(n, box_length)
    _, _, k3 = grid.wavevector
    kabs = np.where(grid.kabs > 0, grid.kabs, 1.0)
    values = np.broadcast_to(single_band_bump(grid.kabs, k3 / kabs), grid.shape) * (grid.kabs > 0)
    gridded, _ = bands.norm_B(SpectralField(grid, values / box_length**3))
    return abs(gridded * box_length**1.5 - continuum) / continuum


def run_suite(name, rng, samples=1000, reports_out=None):
    if name == "phase-identities":
        return phase_identities_suite(rng, samples, reports_out)
    if name == "formulation":
        return formulation_suite(rng)
    if name == "multipliers":
        return multipliers_suite(rng)
    if name == "bands":
        return bands_suite(rng)
    raise ValueError(f"unknown suite {name!r}")


def expand_suites(selector):
    if not selector:
        raise ValueError("empty suite selector")
    names = []
    for part in selector.split(","):
        part = part.strip()
        if part == "all":
            names.extend(SUITES)
        elif part in SUITES:
            names.append(part)
        else:
            raise ValueError(f"unknown suite {part!r}; choose from {', '.join(SUITES + ('all',))}")
    return list(dict.fromkeys(names))


def write_outputs(out_dir, name, checks, reports=None):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_checks_csv(out_dir / f"verify-{name}.csv", checks)
    if reports:
        geometry.write_reports_csv(out_dir / f"verify-{name}-derivatives.csv", reports)
