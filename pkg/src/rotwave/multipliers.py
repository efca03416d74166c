"""Bilinear Fourier multipliers built from single-variable symbols.

A :class:`SymbolPipeline` stores ``m(xi, eta) = sum_t c_t prod_f s_f(slot_f)``
where each factor is an elementary symbol (see
:func:`rotwave.spectral.elementary_symbol`) evaluated at the output ``xi``, the
first input ``xi - eta`` or the second input ``eta``.  The pseudo-product

    Q_m[f, g]^(xi) = sum_eta m(xi, eta) f^(xi - eta) g^(eta)

is evaluated term by term with FFTs, which is exact for this class.

Operators are written with ``R_j = |grad_h|^-1 d_j`` (symbol ``i xi_j/|xi_h|``)
and ``Lam = d_3 |grad|^-1`` (symbol ``i Lambda``); the powers of ``i`` live in
the term coefficients.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from itertools import product

import numpy as np

from .bands import band_weight, project_kpq
from .spectral import SpectralField, elementary_symbol, fftn, ifftn, real_field_from_physical

SLOTS = ("out", "in1", "in2")
TAGS = (
    "one",
    "riesz1",
    "riesz2",
    "riesz3",
    "rieszh1",
    "rieszh2",
    "sqrt1ml2",
    "lambda",
    "absxi",
)


@dataclass(frozen=True)
class Term:
    coeff: complex
    factors: tuple  # sorted ((slot, tag), ...)

    def slot_tags(self, slot):
        return tuple(tag for s, tag in self.factors if s == slot)


class SymbolPipeline:
    """Sum of coefficient times products of slot-wise elementary symbols."""

    def __init__(self, terms=()):
        merged = defaultdict(complex)
        for term in terms:
            for slot, tag in term.factors:
                if slot not in SLOTS or tag not in TAGS:
                    raise ValueError(f"bad factor {(slot, tag)!r}")
            key = tuple(sorted(f for f in term.factors if f[1] != "one"))
            merged[key] += term.coeff
        self.terms = tuple(Term(c, k) for k, c in merged.items() if abs(c) > 1e-15)

    def __add__(self, other):
        return SymbolPipeline(self.terms + other.terms)

    def __sub__(self, other):
        return self + other.scale(-1)

    def __neg__(self):
        return self.scale(-1)

    def scale(self, c):
        return SymbolPipeline(Term(t.coeff * c, t.factors) for t in self.terms)

    def __len__(self):
        return len(self.terms)

    def text(self):
        """Human-readable term list, one term per line."""
        lines = []
        for t in sorted(self.terms, key=lambda t: t.factors):
            parts = [f"{tag}({_SLOT_LABEL[slot]})" for slot, tag in t.factors]
            lines.append(f"{_fmt_complex(t.coeff):>14}  " + " * ".join(parts or ["1"]))
        return "\n".join(lines)


_SLOT_LABEL = {"out": "xi", "in1": "xi-eta", "in2": "eta"}


def _fmt_complex(c):
    c = complex(c)
    if abs(c.imag) < 1e-15:
        return f"{c.real:+.6g}"
    if abs(c.real) < 1e-15:
        return f"{c.imag:+.6g}i"
    return f"({c.real:+.6g}{c.imag:+.6g}i)"


class Op:
    """Single-slot operator: a linear combination of symbol products."""

    def __init__(self, parts):
        self.parts = {tuple(sorted(k)): complex(v) for k, v in parts.items()}

    def __mul__(self, other):
        out = defaultdict(complex)
        for (k1, v1), (k2, v2) in product(self.parts.items(), other.parts.items()):
            out[tuple(sorted(k1 + k2))] += v1 * v2
        return Op(out)

    def __add__(self, other):
        out = defaultdict(complex, self.parts)
        for k, v in other.parts.items():
            out[k] += v
        return Op(out)

    def __neg__(self):
        return Op({k: -v for k, v in self.parts.items()})

    def __rmul__(self, scalar):
        return Op({k: scalar * v for k, v in self.parts.items()})


ONE = Op({(): 1})
LAM = Op({("lambda",): 1j})
SIN = Op({("sqrt1ml2",): 1})
ABS = Op({("absxi",): 1})
ONE_MINUS_2LAMBDA2 = Op({(): 1, ("lambda", "lambda"): -2})


def R(j):
    """Horizontal Riesz-type operator ``|grad_h|^-1 d_j``."""
    return Op({(f"rieszh{j}",): 1j})


def eps(j, k):
    return {(1, 2): 1, (2, 1): -1}.get((j, k), 0)


def bilinear(out, in1, in2, coeff=1.0):
    """Pipeline of ``out {in1 f . in2 g}``."""
    terms = []
    for (ko, vo), (k1, v1), (k2, v2) in product(out.parts.items(), in1.parts.items(), in2.parts.items()):
        factors = tuple(("out", t) for t in ko) + tuple(("in1", t) for t in k1) + tuple(("in2", t) for t in k2)
        terms.append(Term(coeff * vo * v1 * v2, factors))
    return SymbolPipeline(terms)


def _sum(pipelines):
    total = SymbolPipeline()
    for p in pipelines:
        total = total + p
    return total


# base multipliers, with optional extra operators on the two inputs and the output


def q1(f=ONE, g=ONE, out=ONE):
    """``|grad| sqrt(1-L^2) R_j R_p {R_j f . R_p g}``."""
    return _sum(bilinear(out * ABS * SIN * R(j) * R(p), R(j) * f, R(p) * g) for j in (1, 2) for p in (1, 2))


def q2(f=ONE, g=ONE, out=ONE):
    """``|grad| sqrt(1-L^2) R_j R_p eps^jk eps^pq {R_k f . R_q g}``."""
    return _sum(
        bilinear(out * ABS * SIN * R(j) * R(p), R(k) * f, R(q) * g, eps(j, k) * eps(p, q))
        for j, k, p, q in product((1, 2), repeat=4)
        if eps(j, k) and eps(p, q)
    )


def q3(f=ONE, g=ONE, out=ONE):
    """``|grad| R_j {R_j f . sqrt(1-L^2) g}``."""
    return _sum(bilinear(out * ABS * R(j), R(j) * f, SIN * g) for j in (1, 2))


def q4(f=ONE, g=ONE, out=ONE):
    """``|grad| sqrt(1-L^2) {sqrt(1-L^2) f . sqrt(1-L^2) g}``."""
    return bilinear(out * ABS * SIN, SIN * f, SIN * g)


def _angle_pair(f, g, out, sign_eps=-1.0):
    """``|grad| sqrt(1-L^2) R_j R_p (delta delta + sign eps eps) {R_k f . R_q g}``."""
    return q1(f, g, out) + q2(f, g, out).scale(sign_eps)


def m1pp():
    return _angle_pair(ONE, LAM, ONE) + q3(ONE, ONE, LAM)


def m1pm():
    first = _angle_pair(LAM, ONE, ONE) - _angle_pair(ONE, LAM, ONE)
    second = q3(ONE, ONE, LAM) - _q3_swapped(ONE, ONE, LAM)
    return first - second


def _q3_swapped(f=ONE, g=ONE, out=ONE):
    """``|grad| R_j {sqrt(1-L^2) f . R_j g}``."""
    return _sum(bilinear(out * ABS * R(j), SIN * f, R(j) * g) for j in (1, 2))


def m2pp():
    return (
        -q1(LAM, LAM, LAM)
        - q2(ONE, ONE, LAM)
        - q3(LAM, ONE, ONE_MINUS_2LAMBDA2)
        - q4(ONE, ONE, LAM)
    )


def m2pm():
    """Cross-interaction multiplier of the ``c`` equation.

    Expanding ``-Lam Q1[Lam c, Lam c] - Lam Q2[a, a]`` with ``a = (U+ + U-)/2``,
    ``c = (U+ - U-)/2`` gives ``+2 Lam Q1[Lam U+, Lam U-] - 2 Lam Q2[U+, U-]``
    for the mixed part.
    """
    return (
        q1(LAM, LAM, LAM).scale(2.0)
        - q2(ONE, ONE, LAM).scale(2.0)
        + q3(LAM, ONE, ONE_MINUS_2LAMBDA2)
        + _q3_swapped(ONE, LAM, ONE_MINUS_2LAMBDA2)
        + q4(ONE, ONE, LAM).scale(2.0)
    )


def m2pm_unit_weights():
    """Variant with unit weights and equal signs on the ``Q1``/``Q2`` mixed terms.

    Kept for comparison only; the cross-formulation check rejects it.
    """
    return (
        q1(LAM, LAM, LAM)
        + q2(ONE, ONE, LAM)
        + q3(LAM, ONE, ONE_MINUS_2LAMBDA2)
        + _q3_swapped(ONE, LAM, ONE_MINUS_2LAMBDA2)
        + q4(ONE, ONE, LAM).scale(2.0)
    )


@dataclass(frozen=True)
class BilinearKernel:
    """Kernel of one quadratic term of the dispersive system.

    ``output`` and ``inputs`` are the signs of the unknowns involved; ``mu`` and
    ``nu`` are the signs of the phase ``Lambda(xi) + mu Lambda(xi-eta) + nu Lambda(eta)``
    seen by the corresponding profile interaction.
    """

    name: str
    pipeline: SymbolPipeline
    output: int
    inputs: tuple
    mu: int
    nu: int


def build_euler_kernels():
    """The six quarter-weighted kernels of the ``(U+, U-)`` system."""
    a_pp, a_pm, c_pp, c_pm = m1pp(), m1pm(), m2pp(), m2pm()
    spec = [
        ("plus_pp", +1, (+1, +1), a_pp + c_pp),
        ("plus_pm", +1, (+1, -1), a_pm + c_pm),
        ("plus_mm", +1, (-1, -1), c_pp - a_pp),
        ("minus_pp", -1, (+1, +1), a_pp - c_pp),
        ("minus_pm", -1, (+1, -1), a_pm - c_pm),
        ("minus_mm", -1, (-1, -1), -a_pp - c_pp),
    ]
    kernels = []
    for name, out, (s1, s2), pipeline in spec:
        kernels.append(BilinearKernel(name, pipeline.scale(0.25), out, (s1, s2), -out * s1, -out * s2))
    return kernels


def base_multipliers():
    """The four base multipliers with no extra operators."""
    return {"m1": q1(), "m2": q2(), "m3": q3(), "m4": q4()}


def lemma_multipliers():
    return {"m1pp": m1pp(), "m1pm": m1pm(), "m2pp": m2pp(), "m2pm": m2pm()}


def eval_pipeline(m, xi, eta):
    """Pointwise value of ``m`` at arrays of shape ``(..., 3)``."""
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    points = {"out": xi, "in1": xi - eta, "in2": eta}
    cache = {}
    total = np.zeros(np.broadcast(xi[..., 0], eta[..., 0]).shape, dtype=complex)
    for term in m.terms:
        value = np.full(total.shape, term.coeff, dtype=complex)
        for slot, tag in term.factors:
            key = (slot, tag)
            if key not in cache:
                v = points[slot]
                cache[key] = elementary_symbol(tag, v[..., 0], v[..., 1], v[..., 2])
            value = value * cache[key]
        total += value
    return total


class _PhysicalCache:
    def __init__(self, grid, fields):
        self.grid = grid
        self.fields = fields
        self.cache = {}

    def symbol_product(self, tags):
        values = np.ones(self.grid.shape)
        for tag in tags:
            values = values * self.grid.symbol(tag)
        return values

    def get(self, name, tags):
        key = (name, tags)
        if key not in self.cache:
            self.cache[key] = ifftn(self.symbol_product(tags) * self.fields[name]) * self.grid.n**3
        return self.cache[key]


def pseudo_products(grid, fields, requests, dealias=True):
    """Evaluate several pseudo-products sharing input transforms.

    ``fields`` maps names to coefficient arrays; ``requests`` maps an output
    label to a list of ``(pipeline, name1, name2)``.  Returns label -> array.
    """
    phys = _PhysicalCache(grid, fields)
    results = {}
    for label, items in requests.items():
        groups = defaultdict(list)
        for pipeline, f_name, g_name in items:
            for term in pipeline.terms:
                groups[term.slot_tags("out")].append((term.coeff, f_name, term.slot_tags("in1"), g_name, term.slot_tags("in2")))
        out = np.zeros(grid.shape, dtype=complex)
        for out_tags, parts in groups.items():
            acc = np.zeros(grid.shape, dtype=complex)
            for coeff, f_name, f_tags, g_name, g_tags in parts:
                acc += coeff * (phys.get(f_name, f_tags) * phys.get(g_name, g_tags))
            out += phys.symbol_product(out_tags) * (fftn(acc) / grid.n**3)
        if dealias:
            out = np.where(grid.dealias_mask, out, 0)
        results[label] = out
    return results


def q_m(m, f, g, dealias=True):
    """Pseudo-product ``Q_m[f, g]`` of two spectral fields."""
    out = pseudo_products(f.grid, {"f": f.coeffs, "g": g.coeffs}, {"q": [(m, "f", "g")]}, dealias)
    return SpectralField(f.grid, out["q"])


def brute_force_q_m(m, f, g):
    """Direct double sum over ``eta`` with integer index arithmetic (no wrap-around).

    Contributions whose ``xi - eta`` leaves the grid's index range are dropped,
    so inputs should be band-limited to avoid truncation.
    """
    grid = f.grid
    n = grid.n
    idx = grid.index
    half = n // 2
    out = np.zeros(grid.shape, dtype=complex)
    mesh = np.stack(np.meshgrid(idx, idx, idx, indexing="ij"), axis=-1).reshape(-1, 3)
    g_flat = g.coeffs.reshape(-1)
    f_coeffs = f.coeffs
    eta_k = mesh * grid.dk
    keep_eta = np.abs(g_flat) > 0
    eta_idx, eta_k, g_vals = mesh[keep_eta], eta_k[keep_eta], g_flat[keep_eta]
    for pos, xi_idx in enumerate(mesh):
        diff = xi_idx[None, :] - eta_idx
        valid = np.all((diff > -half) & (diff < half), axis=1)
        if not np.any(valid):
            continue
        d = diff[valid] % n
        f_vals = f_coeffs[d[:, 0], d[:, 1], d[:, 2]]
        xi_k = np.broadcast_to(xi_idx * grid.dk, eta_k[valid].shape)
        weights = eval_pipeline(m, xi_k, eta_k[valid])
        i, j, k = xi_idx % n
        out[i, j, k] = np.sum(weights * f_vals * g_vals[valid])
    return SpectralField(grid, np.where(grid.nyquist_free, out, 0))


def quadratic_ac_pipelines():
    """Pipelines of the quadratic part of the ``(a, c)`` system, keyed by equation."""
    a_eq = [(_angle_pair(ONE, LAM, ONE), "a", "c"), (q3(ONE, ONE, LAM), "a", "c")]
    c_eq = [
        (-q1(LAM, LAM, LAM), "c", "c"),
        (-q2(ONE, ONE, LAM), "a", "a"),
        (-q3(LAM, ONE, ONE_MINUS_2LAMBDA2), "c", "c"),
        (-q4(ONE, ONE, LAM), "c", "c"),
    ]
    return {"a": a_eq, "c": c_eq}


_AC_CACHE = {}
_DISP_CACHE = {}


def rhs_ac_arrays(a, c, grid, nonlinear=True, dealias=True):
    lam = 1j * grid.symbol("lambda")
    da = lam * c
    dc = lam * a
    if nonlinear:
        if "ac" not in _AC_CACHE:
            _AC_CACHE["ac"] = quadratic_ac_pipelines()
        q = pseudo_products(grid, {"a": a, "c": c}, _AC_CACHE["ac"], dealias)
        da = da + q["a"]
        dc = dc + q["c"]
    return da, dc


def rhs_ac(s, nonlinear=True, dealias=True):
    """``(da/dt, dc/dt)`` of the scalar system."""
    da, dc = rhs_ac_arrays(s.a.coeffs, s.c.coeffs, s.grid, nonlinear, dealias)
    return SpectralField(s.grid, da), SpectralField(s.grid, dc)


def dispersive_requests():
    if "k" not in _DISP_CACHE:
        names = {+1: "plus", -1: "minus"}
        requests = defaultdict(list)
        for kern in build_euler_kernels():
            requests[names[kern.output]].append((kern.pipeline, names[kern.inputs[0]], names[kern.inputs[1]]))
        _DISP_CACHE["k"] = dict(requests)
    return _DISP_CACHE["k"]


def rhs_dispersive_arrays(plus, minus, grid, nonlinear=True, dealias=True):
    lam = 1j * grid.symbol("lambda")
    dp = lam * plus
    dm = -lam * minus
    if nonlinear:
        q = pseudo_products(grid, {"plus": plus, "minus": minus}, dispersive_requests(), dealias)
        dp = dp + q["plus"]
        dm = dm + q["minus"]
    return dp, dm


def rhs_dispersive(d, nonlinear=True, dealias=True, check_axisymmetry=True):
    """``(dU+/dt, dU-/dt)``; warns when the input is not axisymmetric."""
    if check_axisymmetry and d.grid.n % 4 == 0:
        import warnings

        from .formulation import axisymmetry_deviation, from_dispersive, scalars_to_velocity

        dev = axisymmetry_deviation(scalars_to_velocity(from_dispersive(d)))
        if dev > 1e-8:
            warnings.warn(f"rhs_dispersive called on non-axisymmetric data (deviation {dev:.2e})", stacklevel=2)
    dp, dm = rhs_dispersive_arrays(d.plus.coeffs, d.minus.coeffs, d.grid, nonlinear, dealias)
    return SpectralField(d.grid, dp), SpectralField(d.grid, dm)


def _sample_band(b, rng, count):
    """Points in the support of the band weight, drawn in cylindrical coordinates."""
    kh = np.exp2(rng.uniform(b.p + b.k - 0.5, b.p + b.k + 0.5, count))
    k3 = np.exp2(rng.uniform(b.q + b.k - 1.0, b.q + b.k + 1.0, count)) * rng.choice([-1.0, 1.0], count)
    theta = rng.uniform(0.0, 2.0 * np.pi, count)
    pts = np.stack([kh * np.cos(theta), kh * np.sin(theta), k3], axis=-1)
    return pts[band_weight(b, *pts.T) > 0]


def band_sup_estimate(m, band_out, band_f, band_g, rng, samples=10_000, max_rounds=200):
    """Sampled estimate of ``sup |m(xi, eta)|`` with ``xi - eta``, ``eta`` and ``xi``
    in the supports of ``band_f``, ``band_g`` and ``band_out``.

    Returns ``(estimate, accepted)``; the estimate is a lower bound of the true sup.
    """
    best, accepted = 0.0, 0
    for _ in range(max_rounds):
        zeta = _sample_band(band_f, rng, samples)
        eta = _sample_band(band_g, rng, samples)
        n = min(len(zeta), len(eta))
        xi = zeta[:n] + eta[:n]
        keep = band_weight(band_out, *xi.T) > 0
        if np.any(keep):
            take = np.nonzero(keep)[0][: samples - accepted]
            best = max(best, float(np.max(np.abs(eval_pipeline(m, xi[take], eta[take])))))
            accepted += take.size
        if accepted >= samples:
            break
    return best, accepted


def set_size_bound(band_out, band_f, band_g):
    """``min 2^(p+k) * min 2^((q+k)/2)`` over the three bands."""
    bands_ = (band_out, band_f, band_g)
    return min(2.0 ** (b.p + b.k) for b in bands_) * min(2.0 ** ((b.q + b.k) / 2.0) for b in bands_)


def set_size_ratio(m, band_out, f, g, m_sup, band_f, band_g):
    """``||P_out Q_m[f, g]||_2 / (|S| ||m||_inf ||f||_2 ||g||_2)`` in R^3 normalization.

    Grid norms are root-mean-square over the box, so the R^3 norms of the
    periodic fields carry ``L^(3/2)`` and the pseudo-product an extra ``L^3``
    relative to the coefficient convolution; the ratio below is therefore
    ``||Q||_coef / (L^(3/2) |S| ||m|| ||f|| ||g||)``.
    """
    denom = f.norm() * g.norm()
    if denom == 0:
        return 0.0
    out = project_kpq(q_m(m, f, g), band_out).norm()
    scale = f.grid.box_length**1.5 * set_size_bound(band_out, band_f, band_g) * m_sup
    return out / (scale * denom)


def random_band_field(grid, b, rng):
    """Real random field projected onto band ``b``."""
    noise = real_field_from_physical(grid, rng.standard_normal(grid.shape))
    return project_kpq(noise, b)


@dataclass(frozen=True)
class SetSizeReport:
    max_ratio: float
    ratios: tuple
    m_sup: float
    accepted: int


def set_size_check(m, band_out, band_f, band_g, trials, rng, grid, samples=10_000):
    """Largest ``set_size_ratio`` over ``trials`` random real band-localized pairs."""
    m_sup, accepted = band_sup_estimate(m, band_out, band_f, band_g, rng, samples)
    if m_sup == 0:
        return SetSizeReport(0.0, (0.0,) * trials, 0.0, accepted)
    ratios = tuple(
        set_size_ratio(m, band_out, random_band_field(grid, band_f, rng), random_band_field(grid, band_g, rng), m_sup, band_f, band_g)
        for _ in range(trials)
    )
    return SetSizeReport(max(ratios, default=0.0), ratios, m_sup, accepted)
