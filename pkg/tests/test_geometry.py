import math

import numpy as np
import pytest

from rotwave import geometry as geo
from rotwave.verify import first_order_size_ratios


@pytest.fixture(scope="module")
def points():
    return geo.random_points(np.random.default_rng(0), 1000)


def test_lambda_examples():
    assert geo.lam([0.0, 3.0, 4.0]) == pytest.approx(0.8, abs=1e-15)
    assert geo.lam([0.0, 0.0, 1.0]) == 1.0
    assert np.array_equal(geo.grad_lam([0.0, 0.0, 1.0]), np.zeros(3))
    with pytest.raises(ValueError):
        geo.lam([0.0, 0.0, 1e-14])


def test_grad_lambda_against_central_differences():
    rng = np.random.default_rng(1)
    xi = rng.normal(size=(1000, 3))
    h = 1e-5
    fd = np.stack([(geo.lam(xi + h * e) - geo.lam(xi - h * e)) / (2 * h) for e in np.eye(3)], axis=-1)
    exact = geo.grad_lam(xi)
    err = np.linalg.norm(fd - exact, axis=-1) / np.linalg.norm(exact, axis=-1)
    assert np.max(err) < 1e-6


def test_phase_examples():
    rng = np.random.default_rng(2)
    eta = rng.normal(size=(50, 3))
    for mu in (1, -1):
        for nu in (1, -1):
            assert np.allclose(geo.phase(2 * eta, eta, mu, nu), (1 + mu + nu) * geo.lam(eta), rtol=0, atol=1e-15)
            assert geo.phase([0, 0, 2.0], [0, 0, 1.0], mu, nu) == 1 + mu + nu


def test_phase_bounded(points):
    xi, eta, mu, nu, _ = points
    assert np.max(np.abs(geo.phase(xi, eta, mu, nu))) <= 3


def test_sigma_bar_examples(points):
    assert np.array_equal(geo.sigma_bar([1.0, 0, 0], [0, 0, 1.0]), [-1.0, 0.0])
    v = np.array([0.3, -1.2, 0.7])
    assert np.max(np.abs(geo.sigma_bar(2.5 * v, v))) < 1e-15


def test_first_order_closed_forms_vs_fd(points):
    xi, eta, mu, nu, _ = points
    closed = geo.vf_first_order(xi, eta, mu, nu)
    for name in ("S_eta", "Omega_eta", "S_xi_minus_eta", "Omega_xi_minus_eta", "Upsilon_xi"):
        fd = geo.fd_phase(xi, eta, mu, nu, geo.VF_OPERATORS[name], 1e-5)
        assert np.max(geo.relative_error(fd, closed[name])) < 1e-6, name


def test_first_order_vanishes_when_sigma_zero():
    xi = np.array([0.4, -0.3, 0.9])
    eta = 0.25 * xi
    first = geo.vf_first_order(xi, eta, 1, -1)
    assert first["S_eta"] == 0 and first["Omega_eta"] == 0


def test_first_order_size_window(points):
    xi, eta, mu, nu, _ = points
    ratios = first_order_size_ratios(xi, eta, mu, nu)
    assert np.min(ratios) >= 1 / math.sqrt(2) - 1e-12
    assert np.max(ratios) <= 2 + 1e-12


def test_nested_closed_forms_vs_fd():
    xi, eta, mu, nu, _ = geo.random_points(np.random.default_rng(3), 1000)
    closed = geo.vf_second_third_order(xi, eta, mu, nu)
    for name, value in closed.items():
        fd = geo.fd_phase(xi, eta, mu, nu, geo.VF_OPERATORS[name])
        assert np.max(geo.relative_error(fd, value)) < 1e-5, name


def test_uncorrected_variants_disagree_with_fd():
    xi, eta, mu, nu, _ = geo.random_points(np.random.default_rng(4), 200)
    for name, value in geo.vf_uncorrected_variants(xi, eta, mu, nu).items():
        fd = geo.fd_phase(xi, eta, mu, nu, geo.VF_OPERATORS[name])
        assert np.max(geo.relative_error(fd, value)) > 1e-2, name


def test_exact_mixed_identities():
    residuals = geo.exact_identity_residuals(np.random.default_rng(5), 1000)
    assert len(residuals) == 6
    for name, value in residuals.items():
        assert value < 1e-12, name


def test_upsilon_decomposition_on_radius_squared():
    xi = np.array([0.6, -0.8, 1.5])
    f = lambda x: np.sum(np.asarray(x) ** 2, axis=-1)
    assert abs(float(geo.fd_point(f, xi, ("U",)))) < 1e-8
    assert float(geo.fd_point(f, xi, ("S",))) == pytest.approx(2 * f(xi), rel=1e-8)
    for fd, via in geo.upsilon_decomposition(xi, f).values():
        assert float(via) == pytest.approx(float(fd), rel=1e-8)
    fd3, _ = geo.upsilon_decomposition(xi, f)["d3"]
    assert float(fd3) == pytest.approx(2 * xi[2], rel=1e-8)


def test_upsilon_of_lambda():
    xi = np.array([0.6, -0.8, 1.5])
    f = lambda x: x[..., 2] / np.sqrt(np.sum(x * x, axis=-1))
    assert abs(float(geo.fd_point(f, xi, ("S",)))) < 1e-9
    assert float(geo.fd_point(f, xi, ("U",))) == pytest.approx(-float(geo.sqrt_one_minus_lam2(xi)), rel=1e-8)


def test_upsilon_decomposition_random_polynomials():
    rng = np.random.default_rng(6)
    for _ in range(20):
        f = geo.polynomial_test_function(rng)
        xi = rng.normal(size=3)
        xi[:2] += np.sign(xi[:2]) * 0.5
        for fd, via in geo.upsilon_decomposition(xi, f).values():
            assert geo.relative_error(via, fd) < 1e-6


def test_polar_decomposition_needs_horizontal_part():
    with pytest.raises(ValueError):
        geo.upsilon_coefficients([0.0, 0.0, 1.0])


def test_cross_terms_vs_fd():
    for r in geo.cross_term_reports(np.random.default_rng(7), 1000):
        assert r.max_relerr < 1e-5, r.identity


def test_cross_term_angle_and_gamma_bounds(points):
    xi, eta, _, _, _ = points
    c = geo.cross_term_coeffs(xi, eta)
    assert np.max(np.abs(c["omega_c"] ** 2 + c["omega_s"] ** 2 - 1)) < 1e-12
    bound = 2 * np.linalg.norm(xi, axis=-1) / np.linalg.norm(xi - eta, axis=-1)
    assert np.all(np.abs(c["Gamma_S"]) + np.abs(c["Gamma_U"]) <= bound)


def test_phase_scale_invariance(points):
    xi, eta, mu, nu, _ = points
    assert np.max(np.abs(geo.phase(7.3 * xi, 7.3 * eta, mu, nu) - geo.phase(xi, eta, mu, nu))) < 1e-12


def test_s_and_omega_commute():
    rng = np.random.default_rng(8)
    for _ in range(10):
        f = geo.polynomial_test_function(rng)
        point = rng.normal(size=3)
        assert geo.commutator_residual(f, point) < 1e-5


def test_vertical_sample_is_rejected():
    keep, _, _ = geo.phase_sigma_terms(np.array([[0, 0, 2.0]]), np.array([[0, 0, 1.0]]), -1, -1)
    assert not keep[0]


def test_phase_vs_sigma_small_run_is_inconclusive_or_valid():
    res = geo.phase_vs_sigma_sample(np.random.default_rng(9), accepted_target=50, batch=200, max_batches=1)
    assert res.drawn == 200
    assert res.conclusive == (res.accepted >= 100)


def test_phase_point_validation():
    with pytest.raises(ValueError):
        geo.PhasePoint([1.0, 0, 1.0], [0.5, 0.2, 0.3], 0, 1)
    with pytest.raises(ValueError):
        geo.PhasePoint([1.0, 0, 1.0], [1.0, 0, 1.0], 1, 1)
    p = geo.PhasePoint([1.0, 0.2, 1.0], [0.3, -0.5, 0.4], 1, -1)
    assert p.phase == pytest.approx(float(geo.phase(p.xi, p.eta, 1, -1)))


def test_guard_rejection_rate_reported():
    *_, rate = geo.random_points(np.random.default_rng(10), 500)
    assert 0 <= rate < 1


def test_reports_csv(tmp_path):
    reports = geo.phase_identity_reports(np.random.default_rng(11), 20)
    path = tmp_path / "r.csv"
    geo.write_reports_csv(path, reports)
    lines = path.read_bytes().split(b"\n")
    assert lines[0].startswith(b"identity,samples,max_relerr,step")
    assert len([l for l in lines if l]) == len(reports) + 1
    assert b"\r" not in path.read_bytes()
