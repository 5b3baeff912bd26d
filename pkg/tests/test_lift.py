import math
from fractions import Fraction

import numpy as np
import pytest

from thetalift.lattice import direct_sum
from thetalift.orthogonal import act, eichler_transform, j_factor, majorant_frame, make_domain
from thetalift.lift import (FourierContext, LiftParams, QuadratureSpec, RegularizationRequired, b_isotropic,
                            b_isotropic_display, direct_lift, fourier_coeff_b, k_divisors, lift_as_eisenstein,
                            prefactor, raw_unfolded_series, strip_pole_set, strip_terms, sub_lift_K,
                            sub_lift_direct, unfolded_lift, unfolded_series)
from thetalift.special import EvaluationAtPole
from thetalift.theta import HomoPoly

UU = direct_sum(["U", "U"])
L6 = direct_sum(["U", "U", "A1(-1)", "A1(-1)"])


@pytest.fixture(scope="module")
def dom():
    return make_domain(UU)


@pytest.fixture(scope="module")
def params():
    return LiftParams.for_lattice(UU, 4, 2.5)


@pytest.fixture(scope="module")
def ctx(dom, params):
    return FourierContext(dom, params)


def test_params():
    p = LiftParams.for_lattice(L6, 3, 2.0)
    assert p.kappa == 4 and p.beta == (0, 0)
    with pytest.raises(ValueError):
        LiftParams.for_lattice(L6, 3, 2.0, beta=(1, 0))
    with pytest.raises(ValueError):
        QuadratureSpec(T_cut=0.5)


def test_prefactor():
    want = math.gamma(6.5) / ((-2j * math.pi) ** 4 * math.pi ** 2.5)
    assert abs(prefactor(4, 2.5) - want) < 1e-14 * abs(want)


@pytest.mark.parametrize("X,Y", [([0.1, 0.3], [1.0, 1.0]), ([-0.2, 0.45], [2.0, 1.0])])
def test_routes_agree(dom, params, X, Y):
    Z = dom.point(X, Y)
    a = unfolded_lift(Z, params, 400).value
    b = lift_as_eisenstein(Z, params, 400).value
    c = direct_lift(Z, params).value
    assert abs(a - b) < 1e-13 * abs(b)
    assert abs(c - b) < 1e-8 * abs(b)


def test_grouped_matches_ungrouped():
    dom = make_domain(L6)
    p = LiftParams.for_lattice(L6, 3, 2.5)
    Z = dom.point([0.1, 0.3, 0.2, -0.1], [1.0, 1.0, 0.1, 0.2])
    g = lift_as_eisenstein(Z, p, 100, grouped=True).value
    u = lift_as_eisenstein(Z, p, 100, grouped=False).value
    assert abs(g - u) < 1e-10 * abs(g)


def test_rebracketing(dom, params):
    # summing over multiples n * lam directly equals the zeta-weighted primitive sum
    Z = dom.point([0.1, 0.3], [1.0, 1.2])
    fr = majorant_frame(Z)
    p = HomoPoly.holomorphic_power(4, params.kappa)
    trunc = unfolded_series(UU, fr, p, params, 200, zeta_terms="truncated").value
    raw = raw_unfolded_series(UU, fr, p, params, 200)
    assert abs(trunc - raw) < 1e-12 * abs(raw)


def test_lift_is_modular(dom, params):
    sigma = eichler_transform(UU, (0, 0, 1, 0), (0, 1, 0, 0))
    Z = dom.point([0.1, 0.3], [1.0, 1.0])
    W = act(sigma, Z)
    assert not np.allclose(W.Y, Z.Y)
    j = j_factor(sigma, Z)
    a = direct_lift(Z, params).value
    b = direct_lift(W, params).value
    assert abs(b - j ** params.kappa * a) < 1e-8 * abs(b)


def test_kappa_zero_needs_regularization(dom):
    p = LiftParams.for_lattice(UU, 0, 2.5)
    assert p.kappa == 0
    with pytest.raises(RegularizationRequired):
        direct_lift(dom.point([0, 0], [1, 1]), p)


def test_strip_terms():
    p = LiftParams(4, 4, (), 2.5 + 0j)
    st = strip_terms(p, HomoPoly.holomorphic_power(4, 4), 2)
    assert st.first == 0 and st.second == 0 and st.pole_pattern == ()
    one = HomoPoly(4, {(0, 0, 0, 0): 1.0})
    st = strip_terms(LiftParams(0, 0, (), 2.5 + 0j), one, 2)
    assert st.pole_pattern == (0,)
    assert {complex(x) for x in st.poles} == {complex(x) for x in strip_pole_set(2, [0])}
    # b+ = 2, t = 0: 1/(t - s) and 1/(s - 1 + t)
    assert abs(st.first - 1 / -2.5) < 1e-15 and abs(st.second - 1 / 1.5) < 1e-15
    with pytest.raises(EvaluationAtPole):
        strip_terms(LiftParams(0, 0, (), 1 + 0j), one, 2)
    assert strip_pole_set(4, [0, 1]) == {Fraction(-1), Fraction(0), Fraction(2), Fraction(1)}


def test_sub_lift_routes(dom, params):
    Y = np.array([1.0, 1.0])
    a = sub_lift_K(dom, Y, params).value
    b = sub_lift_direct(dom, Y, params).value
    assert abs(a - 0.013707783890401882) < 1e-12
    assert abs(a - b) < 1e-7 * abs(a)


def test_sub_lift_vanishes_for_anisotropic_K():
    L = direct_sum(["U", "A1", "A1(-3)"])
    dom = make_domain(L)
    assert not dom.cusp_in_K
    p = LiftParams.for_lattice(L, 3, 2.5)
    assert sub_lift_K(dom, np.array([1.0, 0.1]), p).value == 0


def test_divisors(dom):
    assert k_divisors(dom, (6, 0)) == [1, 2, 3, 6]
    assert k_divisors(dom, (2, 3)) == [1]
    with pytest.raises(ValueError):
        k_divisors(dom, (0, 0))


# torus coefficients int Phi(X + iY) e(-(lam, X)) dX of the unfolded lift (height 400)
# on a 10 x 10 grid at Y = (1, 1); computed once and frozen
TORUS = {
    (2, 0): 0.0007381688152751822,
    (1, 1): 0.006572112067441556,
    (1, -1): 3.400637741865151e-05,
}


@pytest.mark.parametrize("lam", sorted(TORUS))
def test_fourier_coefficients_match_torus(ctx, lam):
    rec = fourier_coeff_b(ctx, lam, [1.0, 1.0])
    want = TORUS[lam]
    assert abs(rec.value - want) < 1e-8 * abs(want)
    assert rec.case_tag == ("isotropic_nonzero" if lam == (2, 0) else "nonzero_norm")


def test_isotropic_display_matches_assembly(ctx):
    for lam in [(1, 0), (3, 0), (0, 2)]:
        a = b_isotropic(ctx, lam, [1.0, 1.3])
        b = b_isotropic_display(ctx, lam, [1.0, 1.3])
        assert abs(a - b) < 1e-12 * abs(a)


def test_zero_coefficient(ctx):
    rec = fourier_coeff_b(ctx, (0, 0), [1.0, 1.0])
    assert rec.case_tag == "zero"
    # b(0) + sub-lift equals the torus average of the direct lift, 0.0370882932... (frozen)
    assert abs(rec.value - 0.02338050939406972) < 1e-9
