"""The regularized theta lift of a vector valued Eisenstein series.

Three independent evaluations are provided:

* ``direct_lift``: quadrature of ``<E, Theta> v^(b+/2 + kappa)`` over the
  truncated fundamental domain,
* ``unfolded_series``: the sum over primitive isotropic vectors of ``L'``
  obtained by unfolding against the Eisenstein series,
* ``lift_as_eisenstein``: the combination of orthogonal Eisenstein series
  ``G_{kappa, delta}`` in signature ``(2, l)``.

The Fourier expansion at a level one cusp is assembled in
``fourier_coeff_b`` and ``sub_lift_K``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .eisenstein import (ConvergenceMarginViolated, EisParams, MIN_CONVERGENCE_MARGIN, VectorEisenstein,
                         constant_term_split, fourier_coefficient)
from .lattice import GramLattice, discriminant_form, isotropic_points
from .orthogonal import (OrthogonalDomain, TubePoint, _orbit_tail, check_two_hyperbolic, cusp_classes,
                         eisenstein_direct, majorant_frame, majorant_gram)
from .special import EvaluationAtPole, bessel_k, e_of, gamma, riemann_zeta, zeta_plus
from .theta import HomoPoly, IsometryFrame, ThetaSum, frame_from_plus_vectors, gaussian_tail


class RegularizationRequired(ValueError):
    pass


class DivisorEnumerationOverflow(RuntimeError):
    pass


# ---------------------------------------------------------------- params

@dataclass(frozen=True)
class LiftParams:
    """Weight ``k``, polynomial degree ``kappa``, isotropic ``beta`` and ``s``.

    ``k = b+/2 + kappa - b-/2``; ``t`` is the regularization parameter and
    only enters ``strip_terms``.
    """

    k: int
    kappa: int
    beta: tuple
    s: complex
    t: complex = 0j

    @classmethod
    def for_lattice(cls, L: GramLattice, k: int, s, beta=None, t=0j) -> "LiftParams":
        D = discriminant_form(L)
        beta = D.zero if beta is None else tuple(beta)
        if D.q(beta) != 0:
            raise ValueError(f"beta = {beta} is not isotropic")
        b_plus, b_minus = L.signature
        twice = 2 * k - b_plus + b_minus
        if twice % 2:
            raise ValueError("k - b+/2 + b-/2 must be an integer")
        return cls(int(k), twice // 2, beta, complex(s), complex(t))

    def eis_params(self, L: GramLattice) -> EisParams:
        return EisParams.for_lattice(L, self.k, self.beta, self.s)

    def snapshot(self) -> dict:
        return {"k": self.k, "kappa": self.kappa, "beta": list(self.beta), "s": self.s, "t": self.t}


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts for the fundamental domain rule.

    The domain is split into the strip ``sqrt(1 - u^2) <= v <= 1`` and the
    rectangle ``1 <= v <= T_cut`` cut into dyadic panels.  ``u_nodes`` is the
    number of Gauss--Legendre nodes in ``u`` (midpoint nodes on the
    rectangle, where the integrand is periodic), ``v_nodes`` the number per
    panel in ``w = log v``.
    """

    T_cut: float = 12.0
    u_nodes: int = 24
    v_nodes: int = 10
    adaptive_tol: float = 1e-6
    max_refinements: int = 2
    eis_bound: float = 40.0
    theta_tol: float = 1e-13

    def __post_init__(self):
        if self.T_cut < 1:
            raise ValueError("T_cut must be at least 1")
        if self.u_nodes < 2 or self.v_nodes < 2:
            raise ValueError("need at least two nodes per direction")

    def refined(self) -> "QuadratureSpec":
        return replace(self, u_nodes=int(1.5 * self.u_nodes), v_nodes=int(1.5 * self.v_nodes))


@dataclass
class LiftEvaluation:
    value: complex
    est_error: float
    route: str
    params: dict
    meta: dict = field(default_factory=dict)


@dataclass
class FourierCoefficientRecord:
    lam: tuple
    Y: tuple
    value: complex
    case_tag: str
    est_error: float
    meta: dict = field(default_factory=dict)


def prefactor(kappa: int, s) -> complex:
    """``Gamma(s + kappa) / ((-2 pi i)^kappa pi^s)``."""
    s = complex(s)
    return gamma(s + kappa) / ((-2j * math.pi) ** kappa * cmath.exp(s * math.log(math.pi)))


def normalization(Z: TubePoint, kappa: int) -> complex:
    """``i^kappa / (2 |Y|^kappa)``: the factor between ``Phi(nu_Z, p, s)`` and ``Phi(Z, s)``."""
    return 1j ** kappa / (2.0 * Z.norm_Y ** kappa)


# ------------------------------------------------------------ quadrature

@dataclass
class DomainRule:
    tau: np.ndarray
    weight: np.ndarray     # includes the invariant measure dv du / v^2
    upper: np.ndarray      # True for nodes with v >= 1
    panel_ends: tuple


def _gauss(n: int, a: float, b: float):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def domain_rule(spec: QuadratureSpec) -> DomainRule:
    """Tensor rule on ``F_T = {|u| <= 1/2, |tau| >= 1, v <= T}``."""
    taus, ws, up = [], [], []
    # strip below v = 1: Gauss in u, Gauss in w = log v above the arc
    uu, wu = _gauss(spec.u_nodes, -0.5, 0.5)
    for u, w_u in zip(uu, wu):
        lo = math.log(math.sqrt(1.0 - u * u))
        ww, w_w = _gauss(spec.v_nodes, lo, 0.0)
        v = np.exp(ww)
        taus.append(u + 1j * v)
        ws.append(w_u * w_w * v / v ** 2)
        up.append(np.zeros(len(v), dtype=bool))
    # dyadic panels above v = 1, periodic midpoint rule in u
    m_u = max(spec.u_nodes, 8)
    um = -0.5 + (np.arange(m_u) + 0.5) / m_u
    ends = [1.0]
    while ends[-1] < spec.T_cut:
        ends.append(min(2 * ends[-1], spec.T_cut))
    for a, b in zip(ends[:-1], ends[1:]):
        ww, w_w = _gauss(spec.v_nodes, math.log(a), math.log(b))
        v = np.exp(ww)
        U, V = np.meshgrid(um, v, indexing="ij")
        W = np.broadcast_to((w_w * v / v ** 2)[None, :] / m_u, U.shape)
        taus.append((U + 1j * V).ravel())
        ws.append(W.ravel())
        up.append(np.ones(U.size, dtype=bool))
    return DomainRule(np.concatenate(taus), np.concatenate(ws), np.concatenate(up), tuple(ends))


def _theta_radius(L: GramLattice, p: HomoPoly, v_min: float, tol: float) -> float:
    series = p.heat_series(-1)
    covol = math.sqrt(abs(L.det))
    R = 2.0
    while gaussian_tail(L.rank, covol, series, v_min, R) > tol and R < 200:
        R += 1.0
    return R


class DirectLiftIntegrator:
    """``Phi(nu, p, s)`` by quadrature over ``F_T`` with the Eisenstein values cached.

    The values of ``E_{k, beta}(tau, s)`` at the nodes do not depend on the
    Grassmannian point, so one integrator serves many ``nu``.
    """

    def __init__(self, L: GramLattice, params: LiftParams, spec: QuadratureSpec | None = None):
        self.L = L
        self.params = params
        self.spec = spec or QuadratureSpec()
        self.D = discriminant_form(L)
        self.E = VectorEisenstein(L, params.eis_params(L), self.spec.eis_bound)
        self._rules = {}
        self._c0 = None

    def _rule(self, spec: QuadratureSpec):
        key = (spec.u_nodes, spec.v_nodes, spec.T_cut)
        if key not in self._rules:
            rule = domain_rule(spec)
            E_vals = self.E(rule.tau)
            E_tail = self.E.tail_estimate(rule.tau)
            self._rules[key] = (rule, E_vals, E_tail)
        return self._rules[key]

    def constant_term_coefficient(self) -> complex:
        """``c(0, 0, s)`` of ``E_{k, beta}``, needed only for regularization."""
        if self._c0 is None:
            self._c0 = constant_term_split(self.E, self.D.zero, 1.2, 2.5).c0
        return self._c0

    def _divergent_part(self, p: HomoPoly, b_plus: int, v: np.ndarray) -> tuple:
        """Constant-in-u part of the integrand growing at the cusp, and its exponents."""
        kappa = self.params.kappa
        s, k = self.params.s, self.params.k
        zero = np.zeros((1, p.nvars))
        series = p.heat_series(-1)
        coeffs = [complex(np.conj(q(zero)[0])) for q in series]
        a0 = 0j
        for e, c in self.E.params.profile:
            if e == self.D.zero:
                a0 += c
            if self.D.neg(e) == self.D.zero:
                a0 += (-1) ** kappa * c
        c0 = None
        pieces = []
        for n, cn in enumerate(coeffs):
            if cn == 0:
                continue
            if c0 is None:
                c0 = self.constant_term_coefficient()
            base = b_plus / 2.0 + kappa - 2 - n
            if a0 != 0:
                pieces.append((a0 * cn, s + base))
            pieces.append((c0 * cn, 1 - s - k + base))
        # pieces are c v^ex against dv; the integrand values are taken against dv / v^2
        total = np.zeros(len(v), dtype=complex)
        for c, ex in pieces:
            total += c * np.exp((ex + 2) * np.log(v))
        return total, pieces

    def integrand_sum(self, frame: IsometryFrame, p: HomoPoly, spec: QuadratureSpec, chunk: int = 256):
        rule, E_vals, E_tail = self._rule(spec)
        v_min = math.sqrt(3) / 2
        R = _theta_radius(self.L, p, v_min, spec.theta_tol)
        sums = [ThetaSum(self.L.gram_array, self.D.lift(g), frame, p, R) for g in self.D.elements]
        n = len(rule.tau)
        theta = np.empty((n, len(sums)), dtype=complex)
        theta_abs = np.empty((n, len(sums)))
        for lo in range(0, n, chunk):
            t = rule.tau[lo:lo + chunk]
            for j, ts in enumerate(sums):
                theta[lo:lo + chunk, j] = ts(t)
                theta_abs[lo:lo + chunk, j] = ts.abs_sum(t)
        v = rule.tau.imag
        weight_v = v ** (frame.b_plus / 2.0 + self.params.kappa)
        f = np.sum(E_vals * np.conj(theta), axis=1) * weight_v
        theta_tail = max(ts.tail(v_min) for ts in sums)
        bound = (np.sum(E_tail[:, None] * theta_abs, axis=1) * self.D.order
                 + theta_tail * np.sum(np.abs(E_vals), axis=1)) * weight_v
        div, pieces = self._divergent_part(p, frame.b_plus, v)
        f = f - np.where(rule.upper, div, 0)
        return rule, f, bound, pieces, R

    def cutoff(self, frame: IsometryFrame, p: HomoPoly, spec: QuadratureSpec) -> float:
        """Height beyond which the constant mode of the integrand is negligible.

        The slowest decaying part is ``v^a exp(-2 pi v h)`` from the
        isotropic vector of ``L'`` with the smallest majorant value ``h``.
        """
        M = frame.majorant_gram()
        h = None
        for bound in (1.0, 4.0, 16.0):
            lam, _, _ = dual_isotropic_vectors(self.L, M, bound)
            if len(lam):
                h = float(np.min(0.5 * np.einsum("ij,jk,ik->i", lam, M, lam)))
                break
        if h is None:
            return spec.T_cut
        a = self.params.s.real + frame.b_plus / 2.0 + p.degree() / 2.0
        T = spec.T_cut
        while math.exp(-2 * math.pi * h * T) * T ** a > 1e-3 * spec.adaptive_tol and T < 400:
            T *= 1.25
        return T

    def integrate(self, frame: IsometryFrame, p: HomoPoly, spec: QuadratureSpec | None = None) -> LiftEvaluation:
        """``Phi(nu, p, s)`` for the frame ``nu``; the ``v >= 1`` divergence is removed analytically.

        When ``p`` has a nonzero heat-series constant, the terms
        ``a v^e`` of the constant term growing at the cusp are subtracted on
        ``v >= 1`` and ``int_1^oo a v^e dv = -a / (e + 1)`` is added back
        (the constant term at ``t = 0`` of the continued integral).
        """
        spec = spec or self.spec
        s = self.params.s
        if (2 * s + self.params.k).real < MIN_CONVERGENCE_MARGIN:
            raise ConvergenceMarginViolated("s is outside the Eisenstein convergence window")
        cur_spec = replace(spec, T_cut=self.cutoff(frame, p, spec))
        prev = None
        history = []
        for _ in range(spec.max_refinements + 1):
            rule, f, bound, pieces, R = self.integrand_sum(frame, p, cur_spec)
            val = complex(np.sum(rule.weight * f))
            history.append(val)
            if prev is not None and abs(val - prev) <= spec.adaptive_tol * abs(val):
                break
            prev = val
            cur_spec = cur_spec.refined()
        analytic = 0j
        for c, ex in pieces:
            if abs(ex + 1) < 1e-12:
                raise EvaluationAtPole(f"constant term v^{ex} at the pole of the strip integral")
            analytic += -c / (ex + 1)
        value = val + analytic
        quad_err = abs(history[-1] - history[-2]) if len(history) > 1 else abs(val)
        tail_err = float(np.sum(rule.weight * bound))
        t_err = _cusp_tail(cur_spec, rule, f)
        meta = {"T_cut": cur_spec.T_cut, "u_nodes": cur_spec.u_nodes, "v_nodes": cur_spec.v_nodes,
                "theta_radius": R, "refinements": len(history) - 1, "quadrature_delta": quad_err,
                "truncation_error": tail_err, "cusp_tail": t_err, "regularized": bool(pieces)}
        return LiftEvaluation(value, quad_err + tail_err + t_err, "direct_integral", self.params.snapshot(), meta)


def _cusp_tail(spec: QuadratureSpec, rule: DomainRule, f: np.ndarray) -> float:
    """Estimate of ``int_{v > T}`` from the decay of the u-mean of the integrand on the last panel."""
    v = rule.tau.imag
    top = rule.upper & (v > rule.panel_ends[-2])
    if not top.any():
        return 0.0
    vt, ft = v[top], f[top]
    vs = np.unique(np.round(vt, 12))
    if len(vs) < 2:
        return 0.0
    m = np.array([abs(np.mean(ft[np.isclose(vt, x)])) for x in vs]) + 1e-300
    rate = math.log(m[0] / m[-1]) / (vs[-1] - vs[0])
    if rate <= 0:
        # no visible decay: bound by the last value times the panel length
        return float(m[-1]) * spec.T_cut / spec.T_cut ** 2
    return float(m[-1] / rate) * math.exp(-rate * (spec.T_cut - vs[-1])) / spec.T_cut ** 2


def direct_lift(Z: TubePoint, params: LiftParams, spec: QuadratureSpec | None = None,
                integrator: DirectLiftIntegrator | None = None) -> LiftEvaluation:
    """``Phi_{k, beta}(Z, s) = i^kappa / (2 |Y|^kappa) Phi(nu_Z, (x1 + i x2)^kappa, s)`` by quadrature.

    Only ``kappa >= 1`` is accepted: then ``p(0) = 0``, ``p`` is harmonic
    and the integral over ``F_T`` converges as ``T`` grows.
    """
    if params.kappa < 1:
        raise RegularizationRequired("kappa = 0: the integral diverges; see strip_terms")
    L = Z.domain.L
    integ = integrator or DirectLiftIntegrator(L, params, spec)
    p = HomoPoly.holomorphic_power(L.rank, params.kappa)
    ev = integ.integrate(majorant_frame(Z), p, spec)
    c = normalization(Z, params.kappa)
    return LiftEvaluation(c * ev.value, abs(c) * ev.est_error, "direct_integral", params.snapshot(), ev.meta)


# ------------------------------------------------------------ strip terms

@dataclass
class StripTerms:
    first: complex
    second: complex
    poles: tuple           # values of s where a summand has a pole at this t
    pole_pattern: tuple    # ("1 - b+/2 + n", ...) with the n for which (Delta^n p)(0) != 0


def strip_terms(params: LiftParams, p: HomoPoly, b_plus: int, t=None) -> StripTerms:
    """The two finite sums produced by the divergent constant terms.

    ``sum_n (Delta^n pbar)(0) / ((-8 pi)^n (t - s - b+/2 + 1 + n) n!)`` and
    ``sum_n (Delta^n pbar)(0) / ((-8 pi)^n (s - b+/2 + t + n) n!)``.  Only
    ``n`` with ``(Delta^n p)(0) != 0`` contribute; the poles in ``s`` are
    at ``1 - b+/2 + n + t`` and ``b+/2 - n - t``.
    """
    s = complex(params.s)
    t = complex(params.t if t is None else t)
    zero = np.zeros((1, p.nvars))
    lap = p.conj().laplacian_powers()
    first = second = 0j
    poles = []
    pattern = []
    for n, q in enumerate(lap):
        c = complex(q(zero)[0])
        if c == 0:
            continue
        poles.extend([1 - b_plus / 2 + n + t, b_plus / 2 - n - t])
        pattern.append(n)
        d1 = t - s - b_plus / 2 + 1 + n
        d2 = s - b_plus / 2 + t + n
        if abs(d1) < 1e-12 or abs(d2) < 1e-12:
            raise EvaluationAtPole(f"s = {s} is a pole of the strip term n = {n}")
        scale = (-8 * math.pi) ** n * math.factorial(n)
        first += c / (scale * d1)
        second += c / (scale * d2)
    return StripTerms(first, second, tuple(poles), tuple(pattern))


def strip_pole_set(b_plus: int, ns) -> set:
    """``{1 - b+/2 + n, b+/2 - n}`` as exact fractions."""
    half = Fraction(b_plus, 2)
    out = set()
    for n in ns:
        out.add(1 - half + n)
        out.add(half - n)
    return out


# ------------------------------------------------------- unfolded series

def _k_index(D, lam_class, beta, N: int):
    """``m`` mod ``N`` with ``m * lam_class = beta``, or None."""
    for m in range(N):
        if D.scale(m, lam_class) == tuple(beta):
            return m
    return None


def dual_isotropic_vectors(L: GramLattice, majorant: np.ndarray, bound: float):
    """Primitive isotropic ``lam`` of ``L'`` with ``q_nu(lam) <= bound``.

    Returns ``(coords, classes, orders)``: rational coordinates as floats in
    the basis of L, classes in ``L'/L`` and orders ``N_lam``.
    """
    G = L.gram_array.astype(np.int64)
    det = int(round(abs(np.linalg.det(G))))
    adj = np.rint(np.linalg.inv(G) * det).astype(np.int64)
    Ginv = np.linalg.inv(G)
    M_dual = Ginv @ majorant @ Ginv
    ys = isotropic_points(adj, M_dual, bound)
    if len(ys) == 0:
        return np.zeros((0, L.rank)), [], np.zeros(0, dtype=np.int64)
    ys = ys[np.gcd.reduce(np.abs(ys), axis=1) == 1]
    num = ys @ adj.T  # lam = num / det
    g = np.gcd.reduce(np.abs(np.concatenate([num, np.full((len(num), 1), det)], axis=1)), axis=1)
    orders = det // g
    D = discriminant_form(L)
    classes = D.reduce_many(num // g[:, None], orders)
    return num / det, classes, orders


@dataclass
class _Truncation:
    bound: float
    zeta_terms: str = "full"   # "full" or "truncated"


def unfolded_series(L: GramLattice, frame: IsometryFrame, p: HomoPoly, params: LiftParams,
                    height_bound: float = 200.0, zeta_terms: str = "full") -> LiftEvaluation:
    """``Phi(nu, p, s)`` as a sum over primitive isotropic ``lam`` of ``L'``.

    ``2 sum_lam zeta_+^{k_lam}(2s + b+ + kappa - 2) sum_j (Delta^j pbar)(nu(lam)) / ((-8 pi)^j j!)
    Gamma(s + b+/2 + kappa - 1 - j) / (2 pi q_nu(lam))^(s + b+/2 + kappa - 1 - j)``.

    With ``zeta_terms="truncated"`` each ``zeta_+`` is cut to the multiples
    ``n lam`` with ``q_nu(n lam) <= height_bound``, which is term by term the
    sum over all (not only primitive) isotropic vectors in ``beta + L``.
    """
    s = complex(params.s)
    b_plus = frame.b_plus
    kappa = p.degree()
    arg = 2 * s + b_plus + kappa - 2
    if arg.real < 1 + 1e-9 + 0.5:
        raise ConvergenceMarginViolated(f"Re(2s + b+ + kappa - 2) = {arg.real} too small")
    D = discriminant_form(L)
    M = frame.majorant_gram()
    lam, classes, orders = dual_isotropic_vectors(L, M, height_bound)
    if len(lam) == 0:
        return LiftEvaluation(0j, 0.0, "unfolded_series", params.snapshot(), {"n_terms": 0})
    coords = frame.coords(lam)
    qn = 0.5 * np.einsum("ij,jk,ik->i", lam, M, lam)
    pbar = p.conj()
    lap = pbar.laplacian_powers()
    radial = np.zeros(len(lam), dtype=complex)
    for j, q in enumerate(lap):
        if q.is_zero():
            continue
        e = s + b_plus / 2.0 + kappa - 1 - j
        radial += (q(coords) / ((-8 * math.pi) ** j * math.factorial(j)) * gamma(e)
                   * np.exp(-e * np.log(2 * math.pi * qn)))
    zcache = {}
    weights = np.zeros(len(lam), dtype=complex)
    for i, (cls, N) in enumerate(zip(classes, orders)):
        N = int(N)
        m = _k_index(D, cls, params.beta, N)
        if m is None:
            continue
        if zeta_terms == "full":
            key = (N, m)
            if key not in zcache:
                zcache[key] = zeta_plus(N, m, arg)
            weights[i] = zcache[key]
        else:
            n_max = int(math.floor(math.sqrt(height_bound / qn[i]) + 1e-9))
            n = np.arange(1, n_max + 1)
            n = n[(n - m) % N == 0]
            weights[i] = np.sum(np.exp(-arg * np.log(n)))
    terms = 2 * weights * radial
    value = complex(np.sum(terms))
    decay = (arg.real + b_plus) / 2.0 + kappa / 2.0 - 1 + 0.5 * 0
    # |term| ~ C h^(-(Re s + b+/2 + kappa/2 - 1)) for majorant value h
    expo = s.real + b_plus / 2.0 + kappa / 2.0 - 1
    scale = float(np.max(np.abs(terms) * qn ** expo))
    tail = scale * _orbit_tail(len(lam), L.rank, expo, height_bound) if zeta_terms == "full" else 0.0
    return LiftEvaluation(value, tail, "unfolded_series", params.snapshot(),
                          {"n_terms": int(len(lam)), "height_bound": height_bound, "zeta_terms": zeta_terms,
                           "decay_exponent": decay})


def raw_unfolded_series(L: GramLattice, frame: IsometryFrame, p: HomoPoly, params: LiftParams,
                        height_bound: float = 200.0) -> complex:
    """The unfolded sum over all nonzero isotropic ``lam`` in ``beta + L`` with ``q_nu(lam) <= bound``.

    ``2 sum_lam sum_j (Delta^j pbar)(nu(lam)) / ((-8 pi)^j j!) Gamma(e_j) / (2 pi q_nu(lam))^(e_j)``.
    """
    s = complex(params.s)
    b_plus = frame.b_plus
    kappa = p.degree()
    D = discriminant_form(L)
    M = frame.majorant_gram()
    lam, classes, orders = dual_isotropic_vectors(L, M, height_bound)
    out = []
    for x, N in zip(lam, orders):
        qn = 0.5 * float(x @ M @ x)
        n_max = int(math.floor(math.sqrt(height_bound / qn) + 1e-9))
        for n in range(1, n_max + 1):
            y = n * x
            num = np.rint(y * int(N)).astype(np.int64)
            if D.reduce_many(num[None, :], [int(N)])[0] == tuple(params.beta):
                out.append(y)
    if not out:
        return 0j
    out = np.array(out)
    coords = frame.coords(out)
    qn = 0.5 * np.einsum("ij,jk,ik->i", out, M, out)
    total = np.zeros(len(out), dtype=complex)
    for j, q in enumerate(p.conj().laplacian_powers()):
        if q.is_zero():
            continue
        e = s + b_plus / 2.0 + kappa - 1 - j
        total += (q(coords) / ((-8 * math.pi) ** j * math.factorial(j)) * gamma(e)
                  * np.exp(-e * np.log(2 * math.pi * qn)))
    return complex(2 * np.sum(total))


def unfolded_lift(Z: TubePoint, params: LiftParams, height_bound: float = 200.0) -> LiftEvaluation:
    """``Phi_{k, beta}(Z, s)`` through ``unfolded_series`` at the frame of Z."""
    L = Z.domain.L
    p = HomoPoly.holomorphic_power(L.rank, params.kappa)
    ev = unfolded_series(L, majorant_frame(Z), p, params, height_bound)
    c = normalization(Z, params.kappa)
    return LiftEvaluation(c * ev.value, abs(c) * ev.est_error, "unfolded_series", ev.params, ev.meta)


# ----------------------------------------------------- Eisenstein route

def lift_as_eisenstein(Z: TubePoint, params: LiftParams, height_bound: float = 200.0,
                       grouped: bool = True) -> LiftEvaluation:
    """``Phi_{k, beta}(Z, s)`` as a combination of orthogonal Eisenstein series.

    Grouped: ``pref * sum_delta N_delta^(2s + kappa) zeta_+^{k_delta}(2s + kappa) G_{kappa, delta}(Z, s)``
    over isotropic ``delta`` of ``L'/L``.  Ungrouped: the same sum written over
    primitive isotropic ``lam`` of ``L'`` with terms
    ``zeta_+^{k_lam}(2s + kappa) (lam, Z_L)^(-kappa) (q(Y) / |(lam, Z_L)|^2)^s``.
    Both truncate at ``q_Z(N_lam lam) <= height_bound``.
    """
    s = complex(params.s)
    kappa = params.kappa
    L = Z.domain.L
    D = discriminant_form(L)
    pref = prefactor(kappa, s)
    arg = 2 * s + kappa
    if grouped:
        check_two_hyperbolic(L)
        total, tail = 0j, 0.0
        per_class = {}
        for cls in cusp_classes(L):
            N = cls.N_delta
            m = _k_index(D, cls.delta, params.beta, N)
            if m is None:
                continue
            G = eisenstein_direct(kappa, cls, Z, s, height_bound)
            w = N ** arg * zeta_plus(N, m, arg)
            per_class[str(cls.delta)] = G.value
            total += w * G.value
            tail += abs(w) * G.tail_estimate
        return LiftEvaluation(pref * total, abs(pref) * tail, "eisenstein_combination", params.snapshot(),
                              {"grouped": True, "height_bound": height_bound, "orbit_sums": per_class})
    maj = majorant_gram(Z)
    lam, classes, orders = dual_isotropic_vectors(L, maj, height_bound)
    qn = 0.5 * np.einsum("ij,jk,ik->i", lam, maj, lam)
    keep = orders.astype(float) ** 2 * qn <= height_bound * (1 + 1e-12)
    pair = lam @ (Z.domain.gram @ Z.Z_L)
    terms = pair ** (-kappa) * np.exp(s * np.log(Z.q_Y / np.abs(pair) ** 2))
    total = 0j
    zcache = {}
    count = 0
    for i in np.nonzero(keep)[0]:
        N = int(orders[i])
        m = _k_index(D, classes[i], params.beta, N)
        if m is None:
            continue
        if (N, m) not in zcache:
            zcache[(N, m)] = zeta_plus(N, m, arg)
        total += zcache[(N, m)] * terms[i]
        count += 1
    sigma = s.real
    c = (2.0 * Z.q_Y) ** (-kappa / 2.0) * 2.0 ** (-sigma)
    tail = c * _orbit_tail(count, L.rank, kappa / 2.0 + sigma, height_bound) * abs(zeta_plus(1, 0, arg.real))
    return LiftEvaluation(pref * total, abs(pref) * tail, "eisenstein_combination", params.snapshot(),
                          {"grouped": False, "height_bound": height_bound, "n_terms": count})


# ------------------------------------------------------ Fourier expansion

def _require_level_one(dom: OrthogonalDomain) -> None:
    if dom.cusp.N_z != 1:
        raise ValueError("Fourier coefficients are implemented at level one cusps (N_z = 1)")


def _frac(x, max_den: int = 10 ** 6) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x).limit_denominator(max_den)


def k_dual_class(dom: OrthogonalDomain, lam) -> tuple:
    """Class in ``L'/L`` of ``lam`` in ``K'`` (K coordinates)."""
    D = discriminant_form(dom.L)
    return D.reduce(dom.cusp.from_K_coords([_frac(x) for x in lam]))


def k_divisors(dom: OrthogonalDomain, lam, cap: int = 10 ** 4) -> list:
    """All ``n >= 1`` with ``lam / n`` in ``K'``."""
    lam = [_frac(x) for x in lam]
    gl = [sum((Fraction(int(g)) * x for g, x in zip(row, lam)), Fraction(0)) for row in dom.gram_K]
    if any(y.denominator != 1 for y in gl):
        raise ValueError("lambda is not in K'")
    g = math.gcd(*[int(y) for y in gl])
    if g == 0:
        raise ValueError("lambda = 0 has no divisor sum")
    if g > cap:
        raise DivisorEnumerationOverflow(f"gcd {g} exceeds {cap}")
    return [n for n in range(1, g + 1) if g % n == 0]


class FourierContext:
    """Eisenstein series of L at fixed ``(k, beta, s)`` with cached coefficient data.

    ``c(delta, 0, s)`` comes from ``constant_term_split``; the samples
    ``c(delta, m, s, v)`` for ``m != 0`` are cached by ``(delta, m, v)``.
    """

    def __init__(self, dom: OrthogonalDomain, params: LiftParams, eis_bound: float = 40.0,
                 split_heights=(1.2, 2.5)):
        self.dom = dom
        self.params = params
        self.D = discriminant_form(dom.L)
        self.E = VectorEisenstein(dom.L, params.eis_params(dom.L), eis_bound)
        self.split_heights = split_heights
        self._c0 = {}
        self._samples = {}

    def c0(self, delta) -> complex:
        delta = tuple(delta)
        if delta not in self._c0:
            self._c0[delta] = constant_term_split(self.E, delta, *self.split_heights).c0
        return self._c0[delta]

    def sample(self, delta, m: float, v: float) -> complex:
        key = (tuple(delta), round(float(m), 12), round(float(v), 14))
        if key not in self._samples:
            nodes = max(64, 2 * int(math.ceil(10.0 / v)))
            self._samples[key] = fourier_coefficient(self.E, delta, m, v, nodes, reduced=True).value
        return self._samples[key]

    def a_coefficient(self, delta) -> int:
        """``delta_{beta, delta} + (-1)^kappa delta_{-beta, delta}``."""
        beta = tuple(self.params.beta)
        delta = tuple(delta)
        return int(delta == beta) + (-1) ** self.params.kappa * int(delta == self.D.neg(beta))


def phi_coefficient(ctx: FourierContext) -> complex:
    """Coefficient of ``q(Y)^(1 - s - k)`` in ``b(0, Y, s)``.

    ``Gamma(1 - s - k + kappa) N^(2 - 2s - 2k + kappa) / ((-2 pi i)^kappa pi^(1 - s - k))
    sum_b c(b z / N, 0, s) zeta_+^b(2 - 2s - 2k + kappa)``.
    """
    p = ctx.params
    s, k, kappa = p.s, p.k, p.kappa
    cusp = ctx.dom.cusp
    N = cusp.N_z
    arg = 2 - 2 * s - 2 * k + kappa
    total = 0j
    for b in range(N):
        delta = ctx.D.reduce([Fraction(b) * Fraction(x) / N for x in cusp.z])
        total += ctx.c0(delta) * zeta_plus(N, b, arg)
    e = 1 - s - k
    return (gamma(e + kappa) * N ** arg / ((-2j * math.pi) ** kappa * cmath.exp(e * math.log(math.pi)))
            * total)


def phi_tilde(params: LiftParams, c0: complex) -> complex:
    """``pi^s Gamma(1-k-s+kappa) zeta(2(1-k-s)+kappa) / (pi^(1-k-s) Gamma(s+kappa) zeta(2s+kappa)) c(0,0,s)``."""
    s, k, kappa = params.s, params.k, params.kappa
    e = 1 - k - s
    return (cmath.exp((s - e) * math.log(math.pi)) * gamma(e + kappa) * riemann_zeta(2 * e + kappa)
            / (gamma(s + kappa) * riemann_zeta(2 * s + kappa)) * c0)


def b_zero(ctx: FourierContext, q_Y: float) -> complex:
    """``b(0, Y, s)``: the ``q(Y)^s`` and ``q(Y)^(1 - s - k)`` terms summed over ``b`` mod ``N_z``."""
    p = ctx.params
    s, kappa = p.s, p.kappa
    cusp = ctx.dom.cusp
    N = cusp.N_z
    first = 0j
    for b in range(N):
        delta = ctx.D.reduce([Fraction(b) * Fraction(x) / N for x in cusp.z])
        a = ctx.a_coefficient(delta)
        if a:
            first += a * zeta_plus(N, b, 2 * s + kappa)
    first *= prefactor(kappa, s) * N ** (2 * s + kappa) * q_Y ** s
    return first + phi_coefficient(ctx) * q_Y ** (1 - s - p.k)


def _hj_weights(kappa: int):
    """``(h, j, C(kappa, h) (kappa - h)! / (kappa - h - 2j)!)`` with ``h + 2j <= kappa``."""
    out = []
    for h in range(kappa + 1):
        for j in range((kappa - h) // 2 + 1):
            out.append((h, j, math.comb(kappa, h) * math.factorial(kappa - h) / math.factorial(kappa - h - 2 * j)))
    return out


def b_isotropic(ctx: FourierContext, lam, Y) -> complex:
    """``b(lam, Y, s)`` for ``q(lam) = 0``, ``lam != 0``, assembled from the unfolding against theta.

    ``i^kappa |Y|^(1-kappa) / sqrt(2) sum_{n | lam} sum_{h, j} (2i)^(-h) (-1)^j C(kappa, h) (-i)^(kappa-h)
    |Y|^h (kappa-h)!/(kappa-h-2j)! x^(kappa-h-2j) / ((8 pi)^j j!) n^h I_{n,h,j}`` with
    ``x = (lam/n, Y)/|Y|`` and ``I`` the two K-Bessel terms of the isotropic integral.
    """
    dom = ctx.dom
    _require_level_one(dom)
    p = ctx.params
    s, k, kappa = p.s, p.k, p.kappa
    Y = np.asarray(Y, dtype=float)
    qY = float(dom.qK(Y))
    nY = math.sqrt(2 * qY)
    lam_f = np.array([float(x) for x in lam])
    if abs(dom.qK(lam_f)) > 1e-12:
        raise ValueError("lambda is not isotropic")
    ly = float(dom.bilK(lam_f, Y))
    total = 0j
    for n in k_divisors(dom, lam):
        mu = [_frac(x) / n for x in lam]
        delta = k_dual_class(dom, mu)
        a = ctx.a_coefficient(delta)
        c = ctx.c0(delta)
        lyn = ly / n
        x = lyn / nY
        arg = 2 * math.pi * n * abs(lyn)
        base = n * qY / abs(lyn)
        for h, j, w in _hj_weights(kappa):
            coef = ((2j) ** (-h) * (-1) ** j * w * (-1j) ** (kappa - h) * nY ** h * x ** (kappa - h - 2 * j)
                    / ((8 * math.pi) ** j * math.factorial(j)) * n ** h)
            nu1 = s - 0.5 + kappa - h - j
            nu2 = 0.5 + kappa - h - j - k - s
            integral = 2 * c * cmath.exp(nu2 * math.log(base)) * bessel_k(nu2, arg)
            if a:
                integral += 2 * a * cmath.exp(nu1 * math.log(base)) * bessel_k(nu1, arg)
            total += coef * integral
        # e(n (delta, z')) = 1: delta has a representative in K' and K is orthogonal to z'
    return 1j ** kappa * nY ** (1 - kappa) / math.sqrt(2) * total


def b_isotropic_display(ctx: FourierContext, lam, Y) -> complex:
    """The closed display for isotropic ``lam`` at a level one cusp, term by term as printed.

    ``2 |(lam,Y)|^(1/2) / 2^kappa sum_{n | lam} [q(Y)^s |(lam,Y)|^(-s) n^(2s-1+kappa) A_n S_1
    + q(Y)^(1-s-k) |(lam,Y)|^(s+k-1) n^(1-2s-2k+kappa) c_n S_2]`` with
    ``S = sum_{h,j} (-1)^j / ((4 pi |(lam,Y)|)^j j!) C(kappa,h) (kappa-h)!/(kappa-h-2j)! sgn^(kappa-h) K_nu``.
    """
    dom = ctx.dom
    _require_level_one(dom)
    p = ctx.params
    s, k, kappa = p.s, p.k, p.kappa
    Y = np.asarray(Y, dtype=float)
    qY = float(dom.qK(Y))
    lam_f = np.array([float(x) for x in lam])
    ly = float(dom.bilK(lam_f, Y))
    aly = abs(ly)
    sgn = math.copysign(1.0, ly)
    total = 0j
    for n in k_divisors(dom, lam):
        delta = k_dual_class(dom, [_frac(x) / n for x in lam])
        a = ctx.a_coefficient(delta)
        c = ctx.c0(delta)
        S1 = S2 = 0j
        for h, j, w in _hj_weights(kappa):
            f = (-1) ** j / ((4 * math.pi * aly) ** j * math.factorial(j)) * w * sgn ** (kappa - h)
            S1 += f * bessel_k(s - 0.5 + kappa - h - j, 2 * math.pi * aly)
            S2 += f * bessel_k(0.5 - s - k + kappa - h - j, 2 * math.pi * aly)
        total += (qY ** s / aly ** s * n ** (2 * s - 1 + kappa) * a * S1
                  + qY ** (1 - s - k) / aly ** (1 - s - k) * n ** (1 - 2 * s - 2 * k + kappa) * c * S2)
    return 2 * math.sqrt(aly) / 2 ** kappa * total


def _log_gauss_panels(lo: float, hi: float, panels: int, nodes: int):
    edges = np.linspace(math.log(lo), math.log(hi), panels + 1)
    ws, xs = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        x, w = _gauss(nodes, a, b)
        xs.append(np.exp(x))
        ws.append(w * np.exp(x))
    return np.concatenate(xs), np.concatenate(ws)


def b_nonzero_norm(ctx: FourierContext, lam, Y, panels: int = 8, nodes: int = 12) -> tuple:
    """``b(lam, Y, s)`` for ``q(lam) != 0`` with numerically sampled ``c(delta, m, s, v)``.

    The v-integral ``int exp(-pi n^2 q(Y)/v - 2 pi v q_w(lam/n)) c(delta, q(lam/n), s, v)
    v^(-3/2 + kappa - h - j) dv`` is done by Gauss--Legendre panels in ``log v``.
    Returns ``(value, est_error)``; the error is the change under halving the node count.
    """
    dom = ctx.dom
    _require_level_one(dom)
    p = ctx.params
    kappa = p.kappa
    Y = np.asarray(Y, dtype=float)
    qY = float(dom.qK(Y))
    nY = math.sqrt(2 * qY)
    lam_f = np.array([float(x) for x in lam])
    results = []
    for nn in (nodes, max(4, nodes // 2 + 2)):
        total = 0j
        for n in k_divisors(dom, lam):
            mu = lam_f / n
            m = float(dom.qK(mu))
            if abs(m) < 1e-12:
                raise ValueError("lambda is isotropic")
            delta = k_dual_class(dom, [_frac(x) / n for x in lam])
            ly = float(dom.bilK(mu, Y))
            qw = ly * ly / (2 * qY) - m
            a = math.pi * n * n * qY
            v_lo = a / 70.0
            v_hi = 45.0 / (2 * math.pi * (qw + abs(m)))
            v_hi = max(v_hi, 4 * v_lo)
            v, w = _log_gauss_panels(v_lo, v_hi, panels, nn)
            cs = np.array([ctx.sample(delta, m, float(t)) for t in v])
            base = np.exp(-a / v - 2 * math.pi * v * qw) * cs
            x = ly / nY
            for h, j, wt in _hj_weights(kappa):
                coef = ((2j) ** (-h) * (-1) ** j * wt * (-1j) ** (kappa - h) * nY ** h * x ** (kappa - h - 2 * j)
                        / ((8 * math.pi) ** j * math.factorial(j)) * n ** h)
                total += coef * np.sum(w * base * v ** (-1.5 + kappa - h - j))
        results.append(1j ** kappa * nY ** (1 - kappa) / math.sqrt(2) * total)
    return complex(results[0]), float(abs(results[0] - results[1]))


def fourier_coeff_b(ctx: FourierContext, lam, Y) -> FourierCoefficientRecord:
    """``b_{k, beta}(lam, Y, s)`` at the cusp of ``ctx.dom``; ``lam`` in K coordinates."""
    dom = ctx.dom
    lam_f = np.array([float(x) for x in lam])
    Y = np.asarray(Y, dtype=float)
    if not np.any(lam_f):
        val, tag, err = b_zero(ctx, float(dom.qK(Y))), "zero", 0.0
    elif abs(dom.qK(lam_f)) < 1e-12:
        val, tag, err = b_isotropic(ctx, lam, Y), "isotropic_nonzero", 0.0
    else:
        val, err = b_nonzero_norm(ctx, lam, Y)
        tag = "nonzero_norm"
    if tag != "nonzero_norm":
        # the c(delta, 0, s) inputs carry the quadrature error of the constant term split
        err = 1e-10 * abs(val)
    return FourierCoefficientRecord(tuple(float(x) for x in lam), tuple(Y.tolist()), complex(val), tag, err)


def k_frame(dom: OrthogonalDomain, Y) -> IsometryFrame:
    """Frame of ``K ⊗ R`` whose positive vector is ``Y / |Y|``."""
    return frame_from_plus_vectors(dom.gram_K, np.asarray(Y, dtype=float)[None, :])


def k_polynomial(nvars: int, kappa: int) -> HomoPoly:
    """``p_{w,0} = i^kappa x_1^kappa``."""
    return HomoPoly(nvars, {(kappa,) + (0,) * (nvars - 1): 1j ** kappa})


def k_params(dom: OrthogonalDomain, params: LiftParams) -> LiftParams | None:
    """Parameters for ``E^K``: ``beta`` projected to ``K'/K``; None if the projection vanishes."""
    _require_level_one(dom)
    D = discriminant_form(dom.L)
    DK = discriminant_form(dom.K)
    lift = D.lift(tuple(params.beta))
    beta_K = DK.reduce(dom.cusp.to_K_coords(dom.cusp.project(lift)))
    return LiftParams(params.k, params.kappa, beta_K, params.s, params.t)


def sub_lift_K(dom: OrthogonalDomain, Y, params: LiftParams, height_bound: float = 400.0) -> LiftEvaluation:
    """``i^kappa / (2 sqrt(2) |Y|^(kappa-1)) Phi^K(w, p_{w,0}, s)`` through ``unfolded_series`` on K."""
    Y = np.asarray(Y, dtype=float)
    nY = math.sqrt(2 * float(dom.qK(Y)))
    pk = k_params(dom, params)
    c = 1j ** params.kappa / (2 * math.sqrt(2) * nY ** (params.kappa - 1))
    ev = unfolded_series(dom.K, k_frame(dom, Y), k_polynomial(dom.K.rank, params.kappa), pk, height_bound)
    return LiftEvaluation(c * ev.value, abs(c) * ev.est_error, "unfolded_series", params.snapshot(),
                          dict(ev.meta, sub_lift=True))


def sub_lift_direct(dom: OrthogonalDomain, Y, params: LiftParams, spec: QuadratureSpec | None = None
                    ) -> LiftEvaluation:
    """The same sub-lift term by regularized quadrature of the K-lift."""
    Y = np.asarray(Y, dtype=float)
    nY = math.sqrt(2 * float(dom.qK(Y)))
    pk = k_params(dom, params)
    integ = DirectLiftIntegrator(dom.K, pk, spec)
    ev = integ.integrate(k_frame(dom, Y), k_polynomial(dom.K.rank, params.kappa))
    c = 1j ** params.kappa / (2 * math.sqrt(2) * nY ** (params.kappa - 1))
    return LiftEvaluation(c * ev.value, abs(c) * ev.est_error, "direct_integral", params.snapshot(),
                          dict(ev.meta, sub_lift=True))


def torus_coefficient(F, dom: OrthogonalDomain, Y, lam, grid: int = 8) -> complex:
    """``int F(X + iY) e(-(lam, X)) dX`` over ``X`` in ``(K ⊗ R)/K`` by the rectangle rule.

    ``F`` maps a :class:`TubePoint` to a complex number.  The rule is exact
    for trigonometric polynomials of degree below ``grid`` in each coordinate.
    """
    l = dom.dim
    axes = [np.arange(grid) / grid] * l
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, l)
    lam_f = np.array([float(x) for x in lam])
    total = 0j
    for X in mesh:
        total += F(dom.point(X, Y)) * e_of(-float(dom.bilK(lam_f, X)))
    return complex(total / len(mesh))


@dataclass
class ConstantTermFit:
    q_values: tuple
    averages: tuple
    coefficients: tuple   # (A, B, C) of q^s, q^(1-s-k), q^((1-kappa)/2)
    residual: float


def fit_constant_term(dom: OrthogonalDomain, params: LiftParams, Y0, scales=(0.75, 1.0, 1.5, 2.0),
                      grid: int = 6, height_bound: float = 400.0) -> ConstantTermFit:
    """Least-squares fit of the torus averages of ``Phi(X + i t Y0)`` along a ray.

    The average is ``b(0, Y, s)`` plus the sub-lift, so it is modelled as
    ``A q^s + B q^(1-s-k) + C q^((1-kappa)/2)`` with ``q = q(t Y0)``; the lift
    values come from the Eisenstein route.
    """
    s, k, kappa = params.s, params.k, params.kappa
    Y0 = np.asarray(Y0, dtype=float)
    qs, avgs = [], []
    for t in scales:
        Y = t * Y0
        avg = torus_coefficient(lambda Z: lift_as_eisenstein(Z, params, height_bound).value, dom, Y,
                                np.zeros(dom.dim), grid)
        qs.append(float(dom.qK(Y)))
        avgs.append(avg)
    q = np.array(qs)
    A = np.stack([q ** s, q ** (1 - s - k), q ** ((1 - kappa) / 2.0)], axis=1).astype(complex)
    scale = np.abs(A).max(axis=0)
    coef, *_ = np.linalg.lstsq(A / scale, np.array(avgs), rcond=None)
    coef = coef / scale
    res = float(np.abs(A @ coef - np.array(avgs)).max() / np.abs(avgs).max())
    return ConstantTermFit(tuple(qs), tuple(complex(a) for a in avgs), tuple(complex(c) for c in coef), res)
