import math

import numpy as np
import pytest

from rotwave import spectral as sp
from rotwave.spectral import Grid, PhysicalField, SpectralField, SpectralVectorField


@pytest.fixture
def grid():
    return Grid(16, 2 * math.pi * 3)


def physical_coords(grid):
    x = np.arange(grid.n) * grid.box_length / grid.n
    return np.meshgrid(x, x, x, indexing="ij")


def random_real(grid, rng):
    return sp.real_field_from_physical(grid, rng.standard_normal(grid.shape))


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(7)
    with pytest.raises(ValueError):
        Grid(6)
    with pytest.raises(ValueError):
        Grid(8, -1.0)


def test_forward_transform_of_cosine(grid):
    x1, _, _ = physical_coords(grid)
    F = sp.forward_transform(PhysicalField(grid, np.cos(2 * np.pi * x1 / grid.box_length)))
    nonzero = np.argwhere(np.abs(F.coeffs) > 1e-14)
    assert sorted(map(tuple, nonzero)) == [(1, 0, 0), (grid.n - 1, 0, 0)]
    assert abs(F.coeffs[1, 0, 0] - 0.5) < 1e-15
    assert abs(F.coeffs[-1, 0, 0] - 0.5) < 1e-15


def test_forward_transform_of_constant(grid):
    F = sp.forward_transform(PhysicalField(grid, np.ones(grid.shape)))
    assert F.coeffs[0, 0, 0] == pytest.approx(1.0, abs=1e-15)
    F.coeffs[0, 0, 0] = 0
    assert np.max(np.abs(F.coeffs)) < 1e-15


def test_round_trip_and_parseval(grid):
    rng = np.random.default_rng(1)
    f = PhysicalField(grid, rng.standard_normal(grid.shape))
    back = sp.inverse_transform(sp.forward_transform(f))
    assert np.linalg.norm((back.samples - f.samples).ravel()) / np.linalg.norm(f.samples.ravel()) < 1e-13
    F = sp.forward_transform(f)
    assert abs(F.norm() - f.norm()) / f.norm() < 1e-12


def test_inverse_transform_simple_cases(grid):
    assert np.all(sp.inverse_transform(SpectralField.zeros(grid)).samples == 0)
    F = SpectralField.zeros(grid)
    F.coeffs[0, 0, 0] = 2.5
    assert np.allclose(sp.inverse_transform(F).samples, 2.5, atol=1e-15)
    G = SpectralField.zeros(grid)
    G.coeffs[0, 2, 0] = G.coeffs[0, -2, 0] = 0.5
    _, x2, _ = physical_coords(grid)
    assert np.allclose(sp.inverse_transform(G).samples, np.cos(2 * grid.dk * x2), atol=1e-14)


def test_inverse_transform_rejects_non_hermitian(grid):
    F = SpectralField.zeros(grid)
    F.coeffs[1, 0, 0] = 1.0
    with pytest.raises(ValueError):
        sp.inverse_transform(F)


def test_physical_field_rejects_non_finite(grid):
    samples = np.zeros(grid.shape)
    samples[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        PhysicalField(grid, samples)


def delta(grid, index, value=1.0):
    F = SpectralField.zeros(grid)
    F.coeffs[index] = value
    return F


def test_apply_symbol_examples(grid):
    F = random_real(grid, np.random.default_rng(2))
    assert np.array_equal(sp.apply_symbol(F, lambda k1, k2, k3: np.ones_like(k1 + k2 + k3)).coeffs, F.coeffs)
    vertical = delta(grid, (0, 0, 1), 3.0)
    assert sp.apply_symbol(vertical, grid.symbol("lambda")).coeffs[0, 0, 1] == pytest.approx(3.0, abs=1e-15)
    horizontal = delta(grid, (1, 0, 0), 2.0)
    assert sp.apply_symbol(horizontal, grid.symbol("sqrt1ml2")).coeffs[1, 0, 0] == pytest.approx(2.0, abs=1e-15)


def test_apply_symbol_rejects_non_finite(grid):
    with pytest.raises(ValueError):
        sp.apply_symbol(SpectralField.zeros(grid), np.full(grid.shape, np.inf))


def test_elementary_symbol_values():
    assert sp.elementary_symbol("lambda", 0.0, 3.0, 4.0) == pytest.approx(0.8)
    assert sp.elementary_symbol("absxi", 0.0, 3.0, 4.0) == pytest.approx(5.0)
    assert sp.elementary_symbol("rieszh2", 0.0, 3.0, 4.0) == pytest.approx(1.0)
    assert sp.elementary_symbol("sqrt1ml2", 0.0, 3.0, 4.0) == pytest.approx(0.6)
    # zero and axis conventions
    assert sp.elementary_symbol("lambda", 0.0, 0.0, 0.0) == 0.0
    assert sp.elementary_symbol("rieszh1", 0.0, 0.0, 2.0) == 0.0
    with pytest.raises(ValueError):
        sp.elementary_symbol("nope", 1.0, 0.0, 0.0)


def test_grid_symbols_bounded_and_zero_on_nyquist(grid):
    for tag in ("one", "riesz1", "riesz2", "riesz3", "rieszh1", "rieszh2", "sqrt1ml2", "lambda"):
        s = grid.symbol(tag)
        assert np.all(np.abs(s) <= 1.0 + 1e-15)
        assert np.all(s[~grid.nyquist_free] == 0)


def random_vector(grid, rng):
    return SpectralVectorField(grid, np.stack([random_real(grid, rng).coeffs for _ in range(3)]))


def test_leray_projection_properties(grid):
    rng = np.random.default_rng(3)
    u = random_vector(grid, rng)
    u.coeffs[:, 0, 0, 0] = [0.3, -0.2, 0.1]
    pu = sp.leray_project(u)
    assert sp.divergence_residual(pu) < 1e-12
    assert np.array_equal(pu.coeffs[:, 0, 0, 0], u.coeffs[:, 0, 0, 0])
    ppu = sp.leray_project(pu)
    assert np.linalg.norm((ppu.coeffs - pu.coeffs).ravel()) < 1e-14 * pu.norm()
    lhs = pu.norm() ** 2 + (u - pu).norm() ** 2
    assert abs(lhs - u.norm() ** 2) / u.norm() ** 2 < 1e-12
    v = random_vector(grid, rng)
    pv = sp.leray_project(v)
    a = np.vdot(pu.coeffs, v.coeffs)
    b = np.vdot(u.coeffs, pv.coeffs)
    assert abs(a - b) / (u.norm() * v.norm()) < 1e-12


def test_leray_kills_gradient_mode(grid):
    u = SpectralVectorField.zeros(grid)
    u.coeffs[:, 2, 1, 3] = [grid.dk * 2, grid.dk * 1, grid.dk * 3]
    assert sp.leray_project(u).norm() < 1e-15


def test_divergence_free_flag_is_checked(grid):
    u = SpectralVectorField.zeros(grid)
    u.coeffs[0, 1, 0, 0] = 1.0
    with pytest.raises(ValueError):
        SpectralVectorField(grid, u.coeffs, divergence_free=True)


def test_dealias(grid):
    rng = np.random.default_rng(4)
    F = random_real(grid, rng)
    D = sp.dealias(F)
    assert D.norm() <= F.norm()
    kept = np.array_equal(sp.dealias(D).coeffs, D.coeffs)
    assert kept
    top = delta(grid, (grid.n // 2 - 1, 0, 0))
    assert sp.dealias(top).norm() == 0
    low = delta(grid, (2, 1, 1))
    assert np.array_equal(sp.dealias(low).coeffs, low.coeffs)


def test_derivative_identities(grid):
    rng = np.random.default_rng(5)
    F = sp.zero_nyquist(random_real(grid, rng))
    lap = sp.laplacian(F)
    dg = sp.divergence(sp.gradient(F))
    assert np.linalg.norm((dg.coeffs - lap.coeffs).ravel()) / lap.norm() < 1e-13
    twice = sp.lambda_op(sp.lambda_op(F))
    expected = -(grid.symbol("lambda") ** 2) * F.coeffs
    assert np.max(np.abs(twice.coeffs - expected)) < 1e-15
    # curl_h of the horizontal perpendicular gradient is the horizontal Laplacian
    g = sp.gradient(F)
    perp = SpectralVectorField(grid, np.stack([-g.coeffs[1], g.coeffs[0], np.zeros(grid.shape)]))
    k1, k2, _ = grid.wavevector
    lap_h = -(k1**2 + k2**2) * F.coeffs
    assert np.linalg.norm((sp.curl_h(perp).coeffs - lap_h).ravel()) / np.linalg.norm(lap_h.ravel()) < 1e-13


def test_abs_grad_conventions(grid):
    F = delta(grid, (0, 0, 0), 1.0)
    assert sp.abs_grad(F, -1).coeffs[0, 0, 0] == 0
    axis = delta(grid, (0, 0, 2), 1.0)
    assert sp.abs_grad_h(axis, -1).coeffs[0, 0, 2] == 0
    G = delta(grid, (3, 4, 0), 1.0)
    assert sp.abs_grad(G).coeffs[3, 4, 0] == pytest.approx(5 * grid.dk)
    assert sp.partial3(delta(grid, (0, 0, 2))).coeffs[0, 0, 2] == pytest.approx(2j * grid.dk)


def test_real_fields_stay_real(grid):
    rng = np.random.default_rng(6)
    F = sp.zero_nyquist(random_real(grid, rng))
    for G in (sp.lambda_op(F), sp.partial3(F), sp.abs_grad(F, -1), sp.abs_grad_h(F), *sp.gradient(F).components):
        samples = sp.to_physical(G.coeffs, grid)
        assert np.max(np.abs(samples.imag)) < 1e-12 * max(np.max(np.abs(samples.real)), 1e-300)


def test_thread_cap_env(monkeypatch):
    monkeypatch.setenv("ROTWAVE_THREADS", "3")
    assert sp.fft_workers() == 3
    monkeypatch.setenv("ROTWAVE_THREADS", "junk")
    assert sp.fft_workers() == 1
    monkeypatch.delenv("ROTWAVE_THREADS")
    assert sp.fft_workers() == 1
