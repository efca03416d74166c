import math
import warnings

import numpy as np
import pytest
from numpy.polynomial import legendre as npleg
from scipy.special import j0 as scipy_j0

from rotwave import propagator as pg
from rotwave.spectral import Grid, real_field_from_physical
from rotwave.verify import d_norm_cross_check

GAUSS_AT_ORIGIN = math.pi**1.5 / (2 * math.pi) ** 3


def test_j0_at_zero():
    assert pg.bessel_j0(0.0) == 1.0


def test_j0_ode_residual():
    x = np.linspace(0.5, 60.0, 400)
    h = 1e-3
    y0, yp, ym = pg.bessel_j0(x), pg.bessel_j0(x + h), pg.bessel_j0(x - h)
    d1 = (yp - ym) / (2 * h)
    d2 = (yp - 2 * y0 + ym) / h**2
    assert np.max(np.abs(x * d2 + d1 + x * y0)) < 1e-6


@pytest.mark.parametrize("x", [1.0, 5.0, 20.0])
def test_j0_integral_definition(x):
    # trapezoid on a periodic analytic integrand converges geometrically
    theta = np.linspace(0, 2 * math.pi, 512, endpoint=False)
    expected = np.mean(np.cos(x * np.sin(theta)))
    assert abs(pg.bessel_j0(x) - expected) < 1e-10


def test_j0_matches_library_across_branches():
    x = np.concatenate([np.linspace(0, 8, 200), np.linspace(8, 25, 200), np.linspace(25, 500, 400)])
    assert np.max(np.abs(pg.bessel_j0(x) - scipy_j0(x))) < 1e-13


def test_quadrature_grid_validation():
    with pytest.raises(ValueError):
        pg.QuadratureGrid2D(1.0, 0.5)
    with pytest.raises(ValueError):
        pg.QuadratureGrid2D(0.0, 1.0, 1, 4)
    with pytest.raises(ValueError):
        pg.RadialProfile(pg.QuadratureGrid2D(0.0, 1.0, 4, 4), np.zeros((3, 4)))


def test_quadrature_measure_integrates_polynomials():
    grid = pg.QuadratureGrid2D(0.0, 2.0, 16, 16)
    # int_0^2 rho^2 * rho^2 drho * int_{-1}^1 Lambda^2 dLambda
    value = np.sum(grid.measure * (grid.rho**2)[:, None] * (grid.lam**2)[None, :])
    assert value == pytest.approx(32 / 5 * 2 / 3, rel=1e-14)


@pytest.mark.parametrize("t", [0.5, 1.0, 5.0, 20.0, 50.0])
def test_radial_profile_at_origin(t):
    f = pg.radial_gaussian(0)
    value = pg.semigroup_point_eval(f, 0.0, 0.0, t)
    assert abs(value - math.sin(t) / t * GAUSS_AT_ORIGIN) / GAUSS_AT_ORIGIN < 1e-6


def test_t_zero_against_cartesian_quadrature():
    # f^ = (1 + xi_3^2) exp(-|xi_h|^2 - 2 xi_3^2), written in (rho, Lambda)
    grid = pg.QuadratureGrid2D(0.0, 8.0, 128, 128)
    f = pg.RadialProfile.from_function(grid, lambda r, l: (1 + (r * l) ** 2) * np.exp(-(r**2) * (1 + l**2)))
    nodes, weights = npleg.leggauss(96)
    nodes, weights = 7.0 * nodes, 7.0 * weights
    a, b = np.meshgrid(nodes, nodes, indexing="ij")
    wab = np.outer(weights, weights)
    rng = np.random.default_rng(0)
    for _ in range(10):
        xt, z = rng.uniform(0, 3), rng.uniform(-3, 3)
        horizontal = np.sum(wab * np.exp(-(a**2) - b**2) * np.exp(1j * xt * a))
        vertical = np.sum(weights * (1 + nodes**2) * np.exp(-2 * nodes**2) * np.exp(1j * z * nodes))
        expected = horizontal * vertical / (2 * math.pi) ** 3
        got = pg.semigroup_point_eval(f, xt, z, 0.0)
        assert abs(got - expected) / abs(expected) < 1e-8


def test_zero_profile_gives_zero():
    f = pg.radial_gaussian(0) * 0.0
    assert pg.semigroup_point_eval(f, 1.0, 2.0, 5.0) == 0


def test_eval_many_matches_single_points():
    f = pg.localized_bump(0, 0.5)
    zs = np.linspace(-4, 4, 9)
    many = pg.semigroup_eval_many(f, 1.5, zs, 3.0)
    single = [pg.semigroup_point_eval(f, 1.5, z, 3.0) for z in zs]
    assert np.max(np.abs(many - single)) < 1e-12 * np.max(np.abs(single))


def test_resolution_warning():
    f = pg.radial_gaussian(0, n_rho=32, n_lam=16)
    with pytest.warns(pg.QuadratureResolutionWarning):
        pg.semigroup_point_eval(f, 0.0, 0.0, 100.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        pg.semigroup_point_eval(f, 0.0, 0.0, 1.0)


def test_budget_resample_keeps_values():
    f = pg.localized_bump(0, 0.5, n_rho=96, n_lam=96)
    g = pg.budget_resample(f, 40.0, 30.0, 30.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        value = pg.semigroup_point_eval(g, 30.0, 30.0, 40.0)
    lo, hi = pg.effective_rho_range(f)
    assert g.grid.rho_min == lo and g.grid.rho_max == hi
    dense = f.resampled(f.grid.rho_min, f.grid.rho_max, 512, 512)
    reference = pg.semigroup_eval_many(dense, 30.0, [30.0], 40.0, check=False)[0]
    assert abs(value - reference) < 1e-8 * pg.quadrature_l2(f)


def test_resample_outside_range_rejected():
    f = pg.localized_bump(0, 0.5)
    with pytest.raises(ValueError):
        f.resampled(0.1, 1.0, 32, 32)


def test_derivatives_of_polynomial_profile():
    grid = pg.QuadratureGrid2D(0.5, 2.0, 24, 24)
    f = pg.RadialProfile.from_function(grid, lambda r, l: r**3 * l**2)
    assert np.allclose(f.apply_S().values, 3 * f.values, rtol=1e-12, atol=1e-12)
    expected = -np.sqrt(1 - grid.lam**2)[None, :] * 2 * grid.rho[:, None] ** 3 * grid.lam[None, :]
    assert np.allclose(f.apply_Upsilon().values, expected, rtol=1e-12, atol=1e-12)


def test_radial_profile_has_no_upsilon_part():
    f = pg.radial_gaussian(0, n_rho=128, n_lam=32)
    rep = pg.d_norm(f, report=True)
    assert all(u < 1e-10 * max(b, 1e-300) for b, u in rep.terms)
    assert rep.value == pytest.approx(max(b for b, _ in rep.terms), rel=1e-9)


def test_d_norm_homogeneity():
    f = pg.horizontal_gaussian(0)
    assert pg.d_norm(f * (2.0 - 1.5j)) == pytest.approx(2.5 * pg.d_norm(f), rel=1e-12)


def test_d_norm_rejects_under_resolved_profiles():
    grid = pg.QuadratureGrid2D(0.0, 8.0, 24, 24)
    f = pg.RadialProfile.from_function(grid, lambda r, l: np.exp(-(((r - 3) / 0.05) ** 2)) + 0 * l)
    with pytest.raises(ValueError):
        pg.d_norm(f)


def test_d_norm_band_part_matches_grid_norm():
    assert d_norm_cross_check() < 0.10


def test_s_data_keys():
    data = pg.s_data(pg.horizontal_gaussian(0))
    assert set(data) == {"f", "Sf", "Uf", "USf"}
    assert all(v > 0 for v in data.values())


def test_quadrature_l2_of_gaussian():
    # ||f||_2^2 = (2 pi)^-3 int exp(-2 rho^2) d xi = (2 pi)^-3 (pi / 2)^(3/2)
    f = pg.radial_gaussian(0)
    assert pg.quadrature_l2(f) ** 2 == pytest.approx((math.pi / 2) ** 1.5 / (2 * math.pi) ** 3, rel=1e-13)


def test_decay_study_on_radial_gaussian_origin():
    f = pg.radial_gaussian(0)
    times = np.array([1.0, 2.0, 5.0, 10.0])
    study = pg.decay_study(f, 0, times, (np.array([0.0]), np.array([0.0])), d=1.0, refine=False)
    expected = np.abs(np.sin(times) / times) * GAUSS_AT_ORIGIN
    assert np.max(np.abs(study.sups - expected) / GAUSS_AT_ORIGIN) < 1e-6
    with pytest.raises(ValueError):
        pg.decay_study(f, 0, [], d=1.0)


def test_small_time_has_no_decay():
    f = pg.radial_gaussian(0)
    sup, where = pg.sup_at_time(f, 1e-6)
    assert sup == pytest.approx(GAUSS_AT_ORIGIN, rel=1e-6)
    assert where == (0.0, pytest.approx(0.0, abs=1e-12))


def test_semigroup_grid_is_unitary_group():
    grid = Grid(16, 2 * math.pi * 2)
    F = real_field_from_physical(grid, np.random.default_rng(1).standard_normal(grid.shape))
    assert np.array_equal(pg.semigroup_grid(F, 0.0).coeffs, F.coeffs)
    G = pg.semigroup_grid(F, 2.7)
    assert G.norm() == pytest.approx(F.norm(), rel=1e-14)
    composed = pg.semigroup_grid(pg.semigroup_grid(F, 1.1), 1.6)
    assert np.max(np.abs(composed.coeffs - G.coeffs)) < 1e-14
    back = pg.semigroup_grid(G, 2.7, sign=-1)
    assert np.max(np.abs(back.coeffs - F.coeffs)) < 1e-14
