"""Pointwise geometry of the resonance phase in Fourier variables.

All functions are vectorized: wavevectors are arrays whose last axis has
length 3, and the phase signs ``mu``, ``nu`` are +1 or -1 (scalars or arrays
broadcasting against the leading axes).

The phase is ``Phi = Lambda(xi) + mu Lambda(xi - eta) + nu Lambda(eta)`` with
``Lambda(z) = z_3 / |z|``.  Vector fields act on the variable named in the
subscript with the other variable held fixed:

* ``S_eta = eta . grad_eta``, ``Omega_eta = eta_h^perp . grad_eta``
* ``S_{xi-eta}``, ``Omega_{xi-eta}``: same fields in ``zeta = xi - eta``,
  realized by moving ``eta`` with ``xi`` fixed
* ``Upsilon_xi = d/dphi``, the polar-angle derivative of ``xi``.

``v^perp = (-v_2, v_1)`` throughout.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from itertools import product

import numpy as np

SINGULAR_FRACTION = 1e-2
ZERO_REJECT = 1e-12


def _vec(v):
    v = np.asarray(v)
    if v.dtype != np.longdouble:
        v = v.astype(float)
    if v.shape[-1] != 3:
        raise ValueError("wavevectors need a trailing axis of length 3")
    return v


def perp(v):
    v = _vec3ish(v)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def _vec3ish(v):
    v = np.asarray(v)
    return v if v.dtype == np.longdouble else v.astype(float)


def _norm(v):
    return np.sqrt(np.sum(v * v, axis=-1))


def _hnorm(v):
    return np.hypot(v[..., 0], v[..., 1])


def _dot2(a, b):
    return a[..., 0] * b[..., 0] + a[..., 1] * b[..., 1]


def _check_nonzero(xi):
    if np.any(_norm(xi) < ZERO_REJECT):
        raise ValueError("Lambda is undefined at xi = 0")


def lam(xi):
    """``Lambda(xi) = xi_3 / |xi|``."""
    xi = _vec(xi)
    _check_nonzero(xi)
    return xi[..., 2] / _norm(xi)


def sqrt_one_minus_lam2(xi):
    """``|xi_h| / |xi|``."""
    xi = _vec(xi)
    _check_nonzero(xi)
    return _hnorm(xi) / _norm(xi)


def grad_lam(xi):
    xi = _vec(xi)
    _check_nonzero(xi)
    r = _norm(xi)
    r3 = r**3
    out = np.empty(xi.shape, dtype=xi.dtype)
    out[..., 0] = -xi[..., 2] * xi[..., 0] / r3
    out[..., 1] = -xi[..., 2] * xi[..., 1] / r3
    out[..., 2] = _hnorm(xi) ** 2 / r3
    return out


def phase(xi, eta, mu, nu):
    xi, eta = _vec(xi), _vec(eta)
    return lam(xi) + mu * lam(xi - eta) + nu * lam(eta)


def sigma_bar(xi, eta):
    """``xi_3 eta_h - eta_3 xi_h``."""
    xi, eta = _vec(xi), _vec(eta)
    return xi[..., 2:3] * eta[..., :2] - eta[..., 2:3] * xi[..., :2]


def guard_ok(xi, eta):
    """True where every length in the triangle clears the singular-set guard."""
    xi, eta = _vec(xi), _vec(eta)
    zeta = xi - eta
    lengths = np.stack(
        [_norm(xi), _norm(eta), _norm(zeta), _hnorm(xi), _hnorm(eta), _hnorm(zeta)], axis=-1
    )
    biggest = np.max(lengths[..., :3], axis=-1)
    return np.all(lengths >= SINGULAR_FRACTION * biggest[..., None], axis=-1)


@dataclass(frozen=True)
class PhasePoint:
    xi: np.ndarray
    eta: np.ndarray
    mu: int
    nu: int

    def __post_init__(self):
        object.__setattr__(self, "xi", _vec(self.xi).copy())
        object.__setattr__(self, "eta", _vec(self.eta).copy())
        if self.mu not in (1, -1) or self.nu not in (1, -1):
            raise ValueError("phase signs must be +1 or -1")
        if not guard_ok(self.xi, self.eta):
            raise ValueError("point lies inside the singular-set guard")

    @property
    def phase(self):
        return float(phase(self.xi, self.eta, self.mu, self.nu))


def random_points(rng, count, log2_range=(-2.0, 2.0)):
    """Guarded random ``(xi, eta, mu, nu)`` with log-uniform ``|eta|``, ``|xi - eta|``.

    Returns arrays and the rejection rate of the guard.
    """
    xis, etas, drawn = [], [], 0
    while sum(len(x) for x in xis) < count:
        batch = 2 * count + 16
        drawn += batch
        eta = _random_vectors(rng, batch, log2_range)
        zeta = _random_vectors(rng, batch, log2_range)
        xi = eta + zeta
        ok = guard_ok(xi, eta)
        xis.append(xi[ok])
        etas.append(eta[ok])
    xi = np.concatenate(xis)[:count]
    eta = np.concatenate(etas)[:count]
    accepted = sum(len(x) for x in xis)
    mu = rng.choice([-1, 1], size=count)
    nu = rng.choice([-1, 1], size=count)
    return xi, eta, mu, nu, 1.0 - accepted / drawn


def _random_vectors(rng, count, log2_range):
    direction = rng.standard_normal((count, 3))
    direction /= _norm(direction)[:, None]
    size = 2.0 ** rng.uniform(*log2_range, size=count)
    return direction * size[:, None]


# closed forms ---------------------------------------------------------------


def _parts(xi, eta):
    xi, eta = _vec(xi), _vec(eta)
    zeta = xi - eta
    return xi, eta, zeta, _norm(zeta), sigma_bar(xi, eta)


def upsilon_lambda_shift(xi, eta):
    """``Upsilon_xi Lambda(xi - eta)``."""
    xi, eta, zeta, rz, _ = _parts(xi, eta)
    cos_h = _dot2(xi, zeta) / (_hnorm(xi) * _hnorm(zeta))
    s_xi, s_z = sqrt_one_minus_lam2(xi), sqrt_one_minus_lam2(zeta)
    return -(_norm(xi) / rz) * s_z * (lam(xi) * lam(zeta) * cos_h + s_xi * s_z)


def vf_first_order(xi, eta, mu, nu):
    """First vector-field derivatives of the phase."""
    xi, eta, zeta, rz, sb = _parts(xi, eta)
    re = _norm(eta)
    return {
        "S_eta": mu * _dot2(sb, zeta) / rz**3,
        "Omega_eta": -mu * _dot2(sb, perp(zeta)) / rz**3,
        "S_xi_minus_eta": nu * _dot2(sb, eta) / re**3,
        "Omega_xi_minus_eta": -nu * eta[..., 2] * _dot2(perp(xi), eta) / re**3,
        "Upsilon_xi": -sqrt_one_minus_lam2(xi) + mu * upsilon_lambda_shift(xi, eta),
    }


def vf_second_third_order(xi, eta, mu, nu):
    """Nested vector-field derivatives of the phase.

    Names list the operators left to right, e.g. ``S_xme.O_eta2`` is
    ``S_{xi-eta} Omega_eta^2 Phi``.  Only ``Lambda(xi - eta)`` feels these
    fields once an ``eta`` field has been applied, so every entry scales with
    ``mu``.
    """
    xi, eta, zeta, rz, sb = _parts(xi, eta)
    rz2 = rz**2
    first = vf_first_order(xi, eta, 1, 0)
    s1, o1 = first["S_eta"], first["Omega_eta"]
    lz = lam(zeta)
    eta_zeta = np.sum(eta * zeta, axis=-1) / rz2
    xi_zeta = np.sum(xi * zeta, axis=-1) / rz2
    cross = _dot2(perp(eta), xi)  # = eps^{ab} eta_a xi_b
    sig_xi = _dot2(sb, xi) / rz**3
    table = {
        "S_eta2": s1 * (3 * eta_zeta + 2) - sig_xi,
        "O_eta2": 3 * o1 * cross / rz2 - lz * _dot2(eta, xi) / rz2,
        "S_eta.O_eta": s1 * cross / rz2 + o1 * (1 + 2 * eta_zeta),
        "O_xme.O_eta": -lz * _dot2(xi, zeta) / rz2,
        "O_xme.O_eta_alt": -xi[..., 2] / rz * _hnorm(zeta) ** 2 / rz2 - s1,
        "O_xme.S_eta": o1,
        "S_xme.S_eta": s1,
        "S_xme.O_eta": o1,
        "S_xme.S_eta2": s1 * (5 + 6 * eta_zeta) - 2 * sig_xi,
        "S_xme.O_eta2": 6 * o1 * cross / rz2 - lz * _dot2(xi[..., :2] + eta[..., :2], xi) / rz2,
        "O_xme.S_eta2": 3 * o1 * xi_zeta + 3 * s1 * cross / rz2 + eta[..., 2] * cross / rz**3,
        "O_xme.O_eta2": o1 * (1 - 6 * _dot2(xi, zeta) / rz2),
    }
    return {name: mu * value for name, value in table.items()}


def vf_uncorrected_variants(xi, eta, mu, nu):
    """Variants of three nested forms that differ from the ones above by a sign
    or a factor 2.  Kept so the finite-difference oracle can tell them apart."""
    xi, eta, zeta, rz, sb = _parts(xi, eta)
    rz2 = rz**2
    first = vf_first_order(xi, eta, 1, 0)
    s1, o1 = first["S_eta"], first["Omega_eta"]
    cross = _dot2(perp(eta), xi)
    table = {
        "O_xme.O_eta_alt": xi[..., 2] / rz * _hnorm(zeta) ** 2 / rz2 - s1,
        "S_xme.O_eta2": 6 * o1 * cross / rz2 - 2 * lam(zeta) * _dot2(xi[..., :2] + eta[..., :2], xi) / rz2,
        "O_xme.S_eta2": 3 * o1 * np.sum(xi * zeta, axis=-1) / rz2 - 3 * s1 * cross / rz2 + eta[..., 2] * cross / rz**3,
    }
    return {name: mu * value for name, value in table.items()}


# the operator strings behind each closed form, applied right to left
VF_OPERATORS = {
    "S_eta": ("S_eta",),
    "Omega_eta": ("O_eta",),
    "S_xi_minus_eta": ("S_xme",),
    "Omega_xi_minus_eta": ("O_xme",),
    "Upsilon_xi": ("U_xi",),
    "S_eta2": ("S_eta", "S_eta"),
    "O_eta2": ("O_eta", "O_eta"),
    "S_eta.O_eta": ("S_eta", "O_eta"),
    "O_xme.O_eta": ("O_xme", "O_eta"),
    "O_xme.O_eta_alt": ("O_xme", "O_eta"),
    "O_xme.S_eta": ("O_xme", "S_eta"),
    "S_xme.S_eta": ("S_xme", "S_eta"),
    "S_xme.O_eta": ("S_xme", "O_eta"),
    "S_xme.S_eta2": ("S_xme", "S_eta", "S_eta"),
    "S_xme.O_eta2": ("S_xme", "O_eta", "O_eta"),
    "O_xme.S_eta2": ("O_xme", "S_eta", "S_eta"),
    "O_xme.O_eta2": ("O_xme", "O_eta", "O_eta"),
}


def upsilon_coefficients(xi):
    """Coefficients of the spherical decompositions at ``xi``.

    ``d/dxi_3 = a_S S + a_U Upsilon`` and ``S_h = b_S S + b_U Upsilon`` where
    ``S_h = xi_h . grad_h``.  Returns ``{"d3": (a_S, a_U), "S_h": (b_S, b_U)}``.
    """
    xi = _vec(xi)
    if np.any(_hnorm(xi) < ZERO_REJECT):
        raise ValueError("the polar decomposition needs xi_h != 0")
    rho, lm, s = _norm(xi), lam(xi), sqrt_one_minus_lam2(xi)
    return {"d3": (lm / rho, -s / rho), "S_h": (s * s, s * lm)}


def cross_term_coeffs(xi, eta):
    """Vector fields in ``eta`` or ``xi`` acting on axisymmetric ``g(xi - eta)``.

    For ``g`` axisymmetric each of ``S_eta``, ``Omega_eta``, ``Upsilon_xi``
    applied to ``g(xi - eta)`` is ``c_S (S g)(zeta) + c_U (Upsilon g)(zeta)``.
    The entries ``S_eta``, ``Omega_eta``, ``Upsilon_xi`` hold ``(c_S, c_U)``;
    ``Gamma_S``, ``Gamma_U`` repeat the ``Upsilon_xi`` pair.
    """
    xi, eta, zeta, rz, _ = _parts(xi, eta)
    eh, zh = _hnorm(eta), _hnorm(zeta)
    omega_c = _dot2(eta, zeta) / (eh * zh)
    omega_s = _dot2(eta, perp(zeta)) / (eh * zh)
    l_e, s_e = lam(eta), sqrt_one_minus_lam2(eta)
    l_z, s_z = lam(zeta), sqrt_one_minus_lam2(zeta)
    l_x, s_x = lam(xi), sqrt_one_minus_lam2(xi)
    w = _dot2(xi, zeta) / (_hnorm(xi) * zh)
    ratio_e = _norm(eta) / rz
    ratio_x = _norm(xi) / rz
    s_eta = (-ratio_e * (omega_c * s_e * s_z + l_e * l_z), -ratio_e * (omega_c * s_e * l_z - l_e * s_z))
    o_eta = (ratio_e * omega_s * s_e * s_z, ratio_e * omega_s * s_e * l_z)
    gamma_s = ratio_x * (w * l_x * s_z - s_x * l_z)
    gamma_u = ratio_x * (w * l_x * l_z + s_x * s_z)
    return {
        "omega_c": omega_c,
        "omega_s": omega_s,
        "S_eta": s_eta,
        "Omega_eta": o_eta,
        "Upsilon_xi": (gamma_s, gamma_u),
        "Gamma_S": gamma_s,
        "Gamma_U": gamma_u,
    }


# flows and finite differences ----------------------------------------------


def _rotate_h(v, angle):
    c, s = np.cos(angle), np.sin(angle)
    out = np.array(v, copy=True)
    out[..., 0] = c * v[..., 0] - s * v[..., 1]
    out[..., 1] = s * v[..., 0] + c * v[..., 1]
    return out


def _meridional(v, angle):
    """Increase the polar angle of ``v`` by ``angle`` keeping ``|v|`` and azimuth."""
    rho = _norm(v)
    h = _hnorm(v)
    polar = np.arctan2(h, v[..., 2]) + angle
    out = np.empty(v.shape, dtype=v.dtype)
    out[..., 0] = rho * np.sin(polar) * v[..., 0] / h
    out[..., 1] = rho * np.sin(polar) * v[..., 1] / h
    out[..., 2] = rho * np.cos(polar)
    return out


def flow(name, xi, eta, s):
    """Move ``(xi, eta)`` for time ``s`` along the named vector field."""
    s = np.asarray(s)[..., None]
    if name == "S_eta":
        return xi, eta * np.exp(s)
    if name == "O_eta":
        return xi, _rotate_h(eta, s[..., 0])
    if name == "S_xme":
        return xi, xi - np.exp(-s) * (xi - eta)
    if name == "O_xme":
        return xi, xi - _rotate_h(xi - eta, -s[..., 0])
    if name == "U_xi":
        return _meridional(xi, s[..., 0]), eta
    raise ValueError(f"unknown flow {name!r}")


def point_flow(name, point, s):
    """Flows on a single wavevector: ``S``, ``O`` (rotation), ``U`` (polar), ``D3``."""
    s = np.asarray(s, dtype=float)
    if name == "S":
        return point * np.exp(s)[..., None]
    if name == "O":
        return _rotate_h(point, s)
    if name == "U":
        return _meridional(point, s)
    if name == "D3":
        out = np.array(point, copy=True)
        out[..., 2] = out[..., 2] + s
        return out
    if name == "Sh":
        out = np.array(point, copy=True)
        out[..., :2] = out[..., :2] * np.exp(s)[..., None]
        return out
    raise ValueError(f"unknown flow {name!r}")


def _extended(v):
    return np.asarray(v, dtype=np.longdouble)


# central first-derivative weights of order 4 and 8
STENCIL_4 = ((-2, 1.0 / 12), (-1, -8.0 / 12), (1, 8.0 / 12), (2, -1.0 / 12))
STENCIL_8 = (
    (-4, 1.0 / 280), (-3, -4.0 / 105), (-2, 1.0 / 5), (-1, -4.0 / 5),
    (1, 4.0 / 5), (2, -1.0 / 5), (3, 4.0 / 105), (4, -1.0 / 280),
)

# Nested derivatives of the phase can be many orders of magnitude smaller than
# the phase itself, so they use a wider, higher-order stencil.
FD_STEPS = {1: 1e-5, 2: 2e-3, 3: 2e-3}


def _stencil(order):
    return STENCIL_4 if order == 1 else STENCIL_8


def nested_derivative(func, move, operators, step, stencil=None):
    """``V_1 V_2 ... V_m f`` at the base point by tensor central differences.

    ``operators`` lists the fields left to right.  ``move(name, state, s)``
    flows a state; ``func(state)`` evaluates.  The rightmost field is applied
    first to the function, which means its flow is the outermost one acting on
    the point: ``V_1 V_2 f(p) = d_a d_b f(flow_2(b, flow_1(a, p)))``.
    """
    stencil = _stencil(len(operators)) if stencil is None else stencil
    total = 0.0
    for combo in product(stencil, repeat=len(operators)):
        weight = 1.0
        state = None
        for (offset, w), name in zip(combo, operators):
            weight *= w / step
            state = move(name, state, offset * step)
        total = total + weight * func(state)
    return total


def fd_phase(xi, eta, mu, nu, operators, step=None):
    """Finite-difference oracle, evaluated in extended precision."""
    step = FD_STEPS[len(operators)] if step is None else step
    xi, eta = _extended(xi), _extended(eta)

    def move(name, state, s):
        x, e = (xi, eta) if state is None else state
        return flow(name, x, e, s)

    value = nested_derivative(lambda st: phase(st[0], st[1], mu, nu), move, operators, step)
    return np.asarray(value, dtype=float)


def fd_point(func, point, operators, step=None):
    step = FD_STEPS[len(operators)] if step is None else step
    point = _extended(point)

    def move(name, state, s):
        return point_flow(name, point if state is None else state, s)

    return np.asarray(nested_derivative(func, move, operators, step), dtype=float)


def relative_error(approx, exact):
    approx, exact = np.asarray(approx), np.asarray(exact)
    return np.abs(approx - exact) / np.maximum(np.abs(exact), 1e-8)


@dataclass
class DerivReport:
    identity: str
    samples: int
    max_relerr: float
    step: float
    worst_point: tuple = field(default_factory=tuple)

    def passed(self, tol):
        return self.max_relerr < tol

    def row(self):
        return [self.identity, self.samples, repr(self.max_relerr), repr(self.step)] + [
            repr(float(v)) for v in self.worst_point
        ]


def _report(name, fd, exact, xi, eta, step):
    err = relative_error(fd, exact)
    worst = int(np.argmax(err))
    point = tuple(xi[worst]) + tuple(eta[worst])
    return DerivReport(name, int(err.size), float(err[worst]), step, point)


def phase_identity_reports(rng, samples=1000):
    """Closed forms of the phase derivatives against nested finite differences."""
    xi, eta, mu, nu, _ = random_points(rng, samples)
    reports = []
    closed = vf_first_order(xi, eta, mu, nu)
    closed.update(vf_second_third_order(xi, eta, mu, nu))
    for name, ops in VF_OPERATORS.items():
        step = FD_STEPS[len(ops)]
        fd = fd_phase(xi, eta, mu, nu, ops, step)
        reports.append(_report(name, fd, closed[name], xi, eta, step))
    return reports


def exact_identity_residuals(rng, samples=1000):
    """Max relative residuals of identities that should hold to rounding."""
    xi, eta, mu, nu, _ = random_points(rng, samples)
    table = vf_second_third_order(xi, eta, mu, nu)
    sb = sigma_bar(xi, eta)
    scale = np.maximum(_norm(sb), 1e-300)[..., None]
    zeta = xi - eta
    out = {
        "O_xme.S_eta = Omega_eta": table["O_xme.S_eta"] - vf_first_order(xi, eta, mu, nu)["Omega_eta"],
        "S_xme.S_eta = S_eta": table["S_xme.S_eta"] - vf_first_order(xi, eta, mu, nu)["S_eta"],
        "S_xme.O_eta = Omega_eta": table["S_xme.O_eta"] - vf_first_order(xi, eta, mu, nu)["Omega_eta"],
        "O_xme.O_eta two forms": (table["O_xme.O_eta"] - table["O_xme.O_eta_alt"])
        / np.maximum(np.abs(table["O_xme.O_eta"]), 1.0),
        "sigma(xi,eta) = sigma(xi-eta,eta)": _norm(sb - sigma_bar(zeta, eta)) / scale[..., 0],
        "sigma(xi,eta) = -sigma(xi,xi-eta)": _norm(sb + sigma_bar(xi, zeta)) / scale[..., 0],
    }
    return {k: float(np.max(np.abs(v))) for k, v in out.items()}


def _axisym_test_function(coeffs):
    """Smooth axisymmetric ``g(zeta) = G(|zeta_h|, zeta_3)`` from a coefficient triple."""
    a, b, c = coeffs

    def g(z):
        h2 = z[..., 0] ** 2 + z[..., 1] ** 2
        return np.exp(-a * h2) * np.cos(b * z[..., 2] + c * h2) + 0.3 * z[..., 2] * h2

    return g


def cross_term_reports(rng, samples=1000):
    """Cross-term coefficient tables against finite differences on test functions."""
    xi, eta, mu, nu, _ = random_points(rng, samples)
    g = _axisym_test_function(rng.uniform(0.2, 1.0, size=3))
    zeta = xi - eta
    sg = fd_point(g, zeta, ("S",), FD_STEPS[1])
    ug = fd_point(g, zeta, ("U",), FD_STEPS[1])
    coeffs = cross_term_coeffs(xi, eta)
    reports = []
    xi_x, eta_x = _extended(xi), _extended(eta)

    def move(flow_name, state, s):
        x, e = (xi_x, eta_x) if state is None else state
        return flow(flow_name, x, e, s)

    for name, op in (("S_eta", "S_eta"), ("Omega_eta", "O_eta"), ("Upsilon_xi", "U_xi")):
        fd = nested_derivative(lambda st: g(st[0] - st[1]), move, (op,), FD_STEPS[1])
        fd = np.asarray(fd, dtype=float)
        c_s, c_u = coeffs[name]
        reports.append(_report(f"cross {name}", fd, c_s * sg + c_u * ug, xi, eta, FD_STEPS[1]))
    return reports


def upsilon_decomposition(xi, func, step=None):
    """Both sides of the spherical decompositions of ``d/dxi_3`` and ``S_h`` at ``xi``.

    Returns ``{"d3": (fd, via S and Upsilon), "S_h": (fd, via S and Upsilon)}``.
    """
    xi = _vec(xi)
    step = FD_STEPS[1] if step is None else step
    sf = fd_point(func, xi, ("S",), step)
    uf = fd_point(func, xi, ("U",), step)
    coef = upsilon_coefficients(xi)
    out = {}
    for key, op in (("d3", "D3"), ("S_h", "Sh")):
        a_s, a_u = coef[key]
        out[key] = (fd_point(func, xi, (op,), step), a_s * sf + a_u * uf)
    return out


def polynomial_test_function(rng, degree=3):
    """Random polynomial in the Cartesian components."""
    powers = [(i, j, k) for i in range(degree + 1) for j in range(degree + 1) for k in range(degree + 1) if i + j + k <= degree]
    weights = rng.standard_normal(len(powers))

    def f(x):
        x = np.asarray(x, dtype=float)
        total = 0.0
        for (i, j, k), w in zip(powers, weights):
            total = total + w * x[..., 0] ** i * x[..., 1] ** j * x[..., 2] ** k
        return total

    return f


def commutator_residual(func, point, step=None):
    """``S Omega f - Omega S f`` by finite differences, relative to their size."""
    step = FD_STEPS[2] if step is None else step
    so = fd_point(func, point, ("S", "O"), step)
    os_ = fd_point(func, point, ("O", "S"), step)
    return np.abs(so - os_) / np.maximum(np.maximum(np.abs(so), np.abs(os_)), 1e-8)


# phase versus sigma sampling ------------------------------------------------


@dataclass(frozen=True)
class PhaseSigmaResult:
    accepted: int
    drawn: int
    min_p_max_power: float
    min_constant: float
    conclusive: bool


def dyadic_exponents(z):
    """Floored base-2 logs of ``|z|``, ``sqrt(1 - Lambda^2)(z)`` and ``|Lambda(z)|``."""
    z = _vec(z)
    with np.errstate(divide="ignore"):
        k = np.floor(np.log2(_norm(z)))
        p = np.floor(np.log2(sqrt_one_minus_lam2(z)))
        q = np.floor(np.log2(np.abs(lam(z))))
    return k, p, q


def phase_vs_sigma_sample(rng, accepted_target=10_000, batch=20_000, log2_range=(-2.0, 2.0), max_batches=200):
    """Sample the small-phase region and record how large ``sigma_bar`` stays there.

    A sample is accepted when ``|Phi| <= 2^(q_max - 2)``.  Reports the minimum
    over accepted samples of ``2^p_max`` and of
    ``|sigma_bar| / 2^(q_max + k_max + k_min)``.
    """
    accepted, drawn = 0, 0
    min_p, min_c = np.inf, np.inf
    for _ in range(max_batches):
        if accepted >= accepted_target:
            break
        xi, eta, mu, nu, _ = random_points(rng, batch, log2_range)
        drawn += batch
        keep, p_max, const = phase_sigma_terms(xi, eta, mu, nu)
        accepted += int(np.sum(keep))
        if np.any(keep):
            min_p = min(min_p, float(np.min(2.0 ** p_max[keep])))
            min_c = min(min_c, float(np.min(const[keep])))
    return PhaseSigmaResult(accepted, drawn, min_p, min_c, accepted >= 100)


def phase_sigma_terms(xi, eta, mu, nu):
    """Acceptance mask, ``p_max`` and the normalized ``|sigma_bar|`` per sample."""
    xi, eta = _vec(xi), _vec(eta)
    exps = [dyadic_exponents(z) for z in (xi, xi - eta, eta)]
    k = np.stack([e[0] for e in exps])
    p = np.stack([e[1] for e in exps])
    q = np.stack([e[2] for e in exps])
    q_max = np.max(q, axis=0)
    keep = np.abs(phase(xi, eta, mu, nu)) <= 2.0 ** (q_max - 2)
    const = _norm(sigma_bar(xi, eta)) / 2.0 ** (q_max + np.max(k, axis=0) + np.min(k, axis=0))
    return keep, np.max(p, axis=0), const


def write_reports_csv(path, reports):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["identity", "samples", "max_relerr", "step", "xi1", "xi2", "xi3", "eta1", "eta2", "eta3"])
        for r in reports:
            writer.writerow(r.row())
