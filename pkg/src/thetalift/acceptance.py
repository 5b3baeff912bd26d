"""The acceptance checks, one function per criterion.

Each check returns a :class:`CriterionResult`; ``run_all`` runs them in
dependency order (lattices and the Weil representation first, the lift
last).  The same functions back ``thetalift verify-all`` and the
acceptance test module.
"""

from __future__ import annotations

import functools
import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from .eisenstein import EisParams, VectorEisenstein, modularity_residual
from .identities import run_suite
from .lattice import direct_sum, discriminant_form, enumerate_isotropic_vectors, split_hyperbolic
from .lift import (DirectLiftIntegrator, FourierContext, LiftParams, _theta_radius, b_isotropic,
                   b_zero, direct_lift, fit_constant_term, lift_as_eisenstein, phi_coefficient, prefactor,
                   sub_lift_K)
from .orthogonal import eisenstein_direct, make_domain
from .special import riemann_zeta
from .theta import HomoPoly, k_expansion_rhs, standard_frame, theta_component, transformation_residual
from .weil import S, T, WeilRepresentation


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    metric: float
    tolerance: float
    seconds: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"[{flag}] criterion {self.number:2d} {self.name}: "
                f"metric={self.metric:.3e} tol={self.tolerance:.1e} ({self.seconds:.1f}s)")


def _timed(fn):
    @functools.wraps(fn)
    def run(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    return run


WEIL_LATTICES = {
    "U": ["U"],
    "A1": ["A1"],
    "A1(-1)": ["A1(-1)"],
    "A1+A1(-1)": ["A1", "A1(-1)"],
    "U+U+A1(-1)+A1(-1)": ["U", "U", "A1(-1)", "A1(-1)"],
}


@_timed
def weil_relations(tol: float = 1e-12) -> CriterionResult:
    """``S^2 = Z``, ``(ST)^3 = Z``, unitarity and the pattern of ``rho(Z)``."""
    worst, details = 0.0, {}
    pattern_ok = True
    for name, blocks in WEIL_LATTICES.items():
        rep = WeilRepresentation(discriminant_form(direct_sum(blocks)))
        Zf = rep.z_formula()
        st = rep.S @ rep.T
        res = {
            "S2": float(np.abs(rep.S @ rep.S - Zf).max()),
            "ST3": float(np.abs(st @ st @ st - Zf).max()),
            "unitary": float(np.abs(rep.S @ rep.S.conj().T - np.eye(rep.dim)).max()),
        }
        # rho(Z) e_g is a multiple of e_{-g}: compare supports exactly
        support = np.abs(rep.Z) > 0.5
        pattern_ok &= bool(np.array_equal(support, np.abs(Zf) > 0.5))
        worst = max(worst, *res.values())
        details[name] = res
    details["z_pattern_exact"] = pattern_ok
    return CriterionResult(1, "weil_relations", worst <= tol and pattern_ok, worst, tol, details=details)


@_timed
def theta_transformation(tau: complex = 0.2 + 0.8j, tol_s: float = 1e-6, tol_t: float = 1e-12,
                         tail_tol: float = 1e-10) -> CriterionResult:
    """Residual of the theta transformation law under S and T on A1 and U+U."""
    cases = {
        "A1": (direct_sum(["A1"]), HomoPoly.variable(1, 0) ** 2),
        "U+U": (direct_sum(["U", "U"]), HomoPoly.holomorphic_power(2, 2).extend(4, [0, 1])),
    }
    rng = np.random.default_rng(0)
    details, ok, worst = {}, True, 0.0
    v_min = min(tau.imag, S.act(tau).imag)
    for name, (L, p) in cases.items():
        frame = standard_frame(L, perturbation=0.1 * rng.standard_normal((L.b_plus, L.rank)))
        R = _theta_radius(L, p, v_min, tail_tol)
        rs = transformation_residual(L, S, tau, frame, p, R)
        rt = transformation_residual(L, T, tau, frame, p, R)
        details[name] = {"radius": R, "S": rs, "T": rt}
        ok &= rs <= tol_s and rt <= tol_t
        worst = max(worst, rs)
    return CriterionResult(2, "theta_transformation", ok, worst, tol_s, details=details)


@_timed
def k_expansion(tol: float = 1e-5, cd_bound: int = 8, R: float = 25.0) -> CriterionResult:
    """``theta_0(i)`` on U+U against its expansion over ``(c, d)`` at a level one cusp."""
    L = direct_sum(["U", "U"])
    cusp = split_hyperbolic(L)
    rng = np.random.default_rng(1)
    frame = standard_frame(L, perturbation=0.2 * rng.standard_normal((2, 4)))
    p = HomoPoly.holomorphic_power(4, 4)
    lhs, tail = theta_component(L, (), 1j, frame, p, R)
    rhs = k_expansion_rhs(L, (), 1j, frame, p, cusp, cd_bound=cd_bound, R=R)
    gap = abs(lhs[0] - rhs) / abs(lhs[0])
    return CriterionResult(3, "k_expansion", gap <= tol, gap, tol,
                           details={"theta": complex(lhs[0]), "expansion": rhs, "theta_tail": tail})


def _uu_params(L, s=2.5, k=4):
    return LiftParams.for_lattice(L, k, s)


MAIN_POINTS_UU = (([0.1, 0.3], [1.0, 1.0]), ([-0.2, 0.45], [2.0, 1.0]))
MAIN_POINT_L6 = ([0.1, 0.3, 0.2, -0.1], [1.0, 1.0, 0.1, 0.2])


@_timed
def lift_identity(tol: float = 1e-3, include_rank_six: bool = True) -> CriterionResult:
    """Regularized integral against the orthogonal Eisenstein series."""
    cases = []
    L = direct_sum(["U", "U"])
    dom = make_domain(L)
    params = _uu_params(L)
    for X, Y in MAIN_POINTS_UU:
        cases.append((f"U+U q(Y)={dom.qK(np.array(Y)):g}", dom.point(X, Y), params, 400.0))
    if include_rank_six:
        L6 = direct_sum(["U", "U", "A1(-1)", "A1(-1)"])
        dom6 = make_domain(L6)
        cases.append(("U+U+A1(-1)+A1(-1)", dom6.point(*MAIN_POINT_L6), LiftParams.for_lattice(L6, 3, 2.5), 100.0))
    details, ok, worst = {}, True, 0.0
    for name, Z, prm, H in cases:
        d = direct_lift(Z, prm)
        e = lift_as_eisenstein(Z, prm, H)
        gap = abs(d.value - e.value)
        rel = gap / abs(e.value)
        within = gap <= d.est_error + e.est_error + 1e-12 * abs(e.value)
        details[name] = {"direct": d.value, "direct_error": d.est_error, "eisenstein": e.value,
                         "eisenstein_error": e.est_error, "relative_gap": rel, "within_estimates": within}
        ok &= rel <= tol and within
        worst = max(worst, rel)
    return CriterionResult(4, "lift_identity", ok, worst, tol, details=details)


@_timed
def prefactor_identity(tol: float = 1e-4) -> CriterionResult:
    """Ratio of the lift to the bare orbit sum on U+U."""
    L = direct_sum(["U", "U"])
    dom = make_domain(L)
    params = _uu_params(L)
    Z = dom.point(*MAIN_POINTS_UU[0])
    phi = direct_lift(Z, params).value
    # the orbit sum runs over mu and -mu; the series itself counts each pair once
    E = eisenstein_direct(params.kappa, (), Z, params.s, 800.0).value / 2.0
    s, kappa = params.s, params.kappa
    expected = 2.0 * prefactor(kappa, s) * riemann_zeta(2 * s + kappa)
    rel = abs(phi / E - expected) / abs(expected)
    return CriterionResult(5, "prefactor_identity", rel <= tol, rel, tol,
                           details={"ratio": phi / E, "expected": expected})


@_timed
def fourier_expansion(tol: float = 1e-3, fit_tol: float = 1e-4, grid: int = 6) -> CriterionResult:
    """``b(0)`` and an isotropic coefficient against torus averages of the direct lift."""
    L = direct_sum(["U", "U"])
    dom = make_domain(L)
    params = _uu_params(L)
    Y = np.array([1.0, 1.0])
    ctx = FourierContext(dom, params)
    integ = DirectLiftIntegrator(L, params)
    axes = [np.arange(grid) / grid] * dom.dim
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dom.dim)
    vals = np.array([direct_lift(dom.point(X, Y), params, integrator=integ).value for X in mesh])
    lam = np.array([1.0, 0.0])
    avg0 = complex(np.mean(vals))
    avg1 = complex(np.mean(vals * np.exp(-2j * np.pi * (mesh @ dom.gram_K @ lam))))
    sub = sub_lift_K(dom, Y, params).value
    b0 = b_zero(ctx, float(dom.qK(Y)))
    b1 = b_isotropic(ctx, lam, Y)
    rel0 = abs(b0 + sub - avg0) / abs(avg0)
    rel1 = abs(b1 - avg1) / abs(avg1)
    fit = fit_constant_term(dom, params, Y)
    s, kappa = params.s, params.kappa
    lead = fit.coefficients[0] / (prefactor(kappa, s) * riemann_zeta(2 * s + kappa))
    rel_lead = abs(lead - 2.0) / 2.0
    phi_c = phi_coefficient(ctx)
    rel_phi = abs(fit.coefficients[1] - phi_c) / abs(phi_c)
    ok = rel0 <= tol and rel1 <= tol and rel_lead <= fit_tol and rel_phi <= fit_tol
    details = {"b0_plus_sublift": b0 + sub, "torus_average": avg0, "b_isotropic": b1, "torus_coefficient": avg1,
               "rel_b0": rel0, "rel_isotropic": rel1, "leading_coefficient": lead, "rel_leading": rel_lead,
               "second_coefficient": fit.coefficients[1], "phi_coefficient": phi_c, "rel_phi": rel_phi}
    return CriterionResult(6, "fourier_expansion", ok, max(rel0, rel1), tol, details=details)


@_timed
def gamma_binomial(tol: float = 1e-10, seed: int = 0) -> CriterionResult:
    lines = {ln.name: ln for ln in run_suite(seed)}
    exact, num = lines["gamma_binomial_exact"], lines["gamma_binomial_numeric"]
    ok = exact.passed and num.max_residual <= tol
    return CriterionResult(7, "gamma_binomial", ok, num.max_residual, tol,
                           details={"exact_cases": exact.cases, "exact_mismatches": int(exact.max_residual),
                                    "grid_points": num.cases})


@_timed
def zeta_identities(tol: float = 1e-8, seed: int = 0) -> CriterionResult:
    lines = {ln.name: ln for ln in run_suite(seed)}
    names = ("constant_term_zeta", "zeta_plus_functional_equation")
    worst = max(lines[n].max_residual for n in names)
    return CriterionResult(8, "zeta_identities", worst <= tol, worst, tol,
                           details={n: lines[n].max_residual for n in names})


def box_isotropic_dual(L, majorant: np.ndarray, bound: float) -> set:
    """Isotropic ``lam`` in ``L'`` with majorant value <= bound, by scanning a coordinate box.

    Works in the coordinates ``y = G lam`` (integral exactly on ``L'``).
    """
    g = L.gram_array.astype(float)
    ginv = np.linalg.inv(g)
    m_y = ginv @ np.asarray(majorant, dtype=float) @ ginv
    box = np.floor(np.sqrt(2.0 * bound * np.diag(np.linalg.inv(m_y))) + 1e-9).astype(int)
    ranges = [np.arange(-b, b + 1) for b in box]
    ys = np.array(list(itertools.product(*ranges)), dtype=np.int64)
    adj = np.round(ginv * L.det).astype(np.int64)
    iso = np.einsum("ij,jk,ik->i", ys, adj, ys) == 0
    val = 0.5 * np.einsum("ij,jk,ik->i", ys, m_y, ys)
    keep = iso & (val <= bound * (1 + 1e-12)) & np.any(ys != 0, axis=1)
    out = set()
    for y in ys[keep]:
        lam = ginv @ y
        out.add(tuple(int(round(x * L.det)) for x in lam))
    return out


ENUMERATION_CASES = (
    (("U",), 10.0),
    (("U", "U"), 10.0),
    (("A1", "A1(-1)"), 10.0),
    (("U", "A1(-1)"), 10.0),
    (("U", "U", "A1(-1)", "A1(-1)"), 4.0),
)


@_timed
def isotropic_enumeration() -> CriterionResult:
    """Set equality with the box oracle; vectors compared as ``det * lam``."""
    details, ok, mism = {}, True, 0
    rng = np.random.default_rng(2)
    for blocks, bound in ENUMERATION_CASES:
        L = direct_sum(list(blocks))
        frame = standard_frame(L, perturbation=0.1 * rng.standard_normal((L.b_plus, L.rank)))
        M = frame.majorant_gram()
        got = {tuple(int(x * L.det) for x in r.vector) for r in enumerate_isotropic_vectors(L, M, bound)}
        want = box_isotropic_dual(L, M, bound)
        diff = len(got ^ want)
        details["+".join(blocks)] = {"bound": bound, "count": len(got), "symmetric_difference": diff}
        ok &= diff == 0
        mism += diff
    return CriterionResult(9, "isotropic_enumeration", ok, float(mism), 0.0, details=details)


@_timed
def eisenstein_modularity(B: float = 200.0, tol: float = 1e-4) -> CriterionResult:
    L = direct_sum(["U", "U"])
    E = VectorEisenstein(L, EisParams.for_lattice(L, 4, s=3.0), B)
    res, tail = modularity_residual(E, S, 1j)
    r = float(np.abs(res).max())
    return CriterionResult(10, "eisenstein_modularity", r <= tail and r <= tol, r, tol,
                           details={"tail_estimate": tail, "bound": B})


CRITERIA = (weil_relations, theta_transformation, k_expansion, lift_identity, prefactor_identity,
            fourier_expansion, gamma_binomial, zeta_identities, isotropic_enumeration, eisenstein_modularity)

# dependency order: lattices, representation, theta, Eisenstein, identities, lift
ORDER = (1, 9, 2, 3, 10, 7, 8, 4, 5, 6)


def run_all(jobs: int = 1) -> list:
    """All criteria in dependency order; ``jobs > 1`` runs them in worker processes."""
    fns = [CRITERIA[n - 1] for n in ORDER]
    if jobs <= 1:
        results = [fn() for fn in fns]
    else:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(fn) for fn in fns]
            results = [f.result() for f in futures]
    return results
