import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thetalift.identities import (RationalPi, constant_term_zeta_check, exact_gamma_binomial_cases,
                                  gamma_binomial_lhs_exact, gamma_binomial_numeric, gamma_binomial_rhs_exact,
                                  half_gamma_pair, reflection_consequence_check, run_suite, zeta_plus_fe_check,
                                  zeta_sign_symmetry)
from thetalift.special import EvaluationAtPole, PoleAtOne


def test_rational_pi_arithmetic():
    a = RationalPi(Fraction(3, 4), 1)
    assert a.coeff == 3 and a.two_power == -2
    assert (a + RationalPi(Fraction(1, 4), 1)) == RationalPi(1, 1)
    assert (a - a) == RationalPi(0)
    assert (a * RationalPi(2, 1)) == RationalPi(Fraction(3, 2), 2)
    assert math.isclose(float(a), 0.75 * math.pi)
    with pytest.raises(ValueError):
        a + RationalPi(1, 0)


def test_half_gamma_pair_against_mpmath():
    for a in range(5):
        for b in range(5):
            want = mpmath.gamma(0.5 + a) * mpmath.gamma(0.5 + b)
            assert math.isclose(float(half_gamma_pair(a, b)), float(want), rel_tol=1e-14)


def test_gamma_binomial_worked_example():
    # Gamma(1/2) Gamma(5/2) - Gamma(3/2)^2 = 3 pi / 4 - pi / 4
    assert gamma_binomial_lhs_exact(2, 2) == RationalPi(Fraction(1, 2), 1)
    assert gamma_binomial_rhs_exact(2, 2) == RationalPi(Fraction(1, 2), 1)


def test_gamma_binomial_exact_cases():
    cases = exact_gamma_binomial_cases()
    assert len(cases) == 99
    for k, s in cases:
        assert gamma_binomial_lhs_exact(k, s) == gamma_binomial_rhs_exact(k, s)
    with pytest.raises(ValueError):
        gamma_binomial_lhs_exact(3, 2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 8), st.floats(-1.8, 4.0), st.floats(-2.0, 2.0))
def test_gamma_binomial_numeric(kappa, x, y):
    try:
        r = gamma_binomial_numeric(kappa, complex(x, y))
    except EvaluationAtPole:
        return
    assert r.residual < 1e-10


def test_gamma_binomial_against_mpmath():
    kappa, s = 3, 1.3 + 0.4j
    want = sum((-1) ** j * mpmath.binomial(kappa, 2 * j) * mpmath.gamma(0.5 + j) * mpmath.gamma(0.5 + s - j)
               for j in range(2))
    r = gamma_binomial_numeric(kappa, s)
    assert abs(r.lhs - complex(want)) < 1e-12 * abs(want)


def test_gamma_binomial_at_pole():
    with pytest.raises(EvaluationAtPole):
        gamma_binomial_numeric(5, 0.5)
    r = gamma_binomial_numeric(5, 0.5, at_pole="residue")
    assert r.residual < 1e-12


def test_constant_term_removable_point():
    # a Gamma pole on the left meets a trivial zero of zeta
    with pytest.raises(EvaluationAtPole):
        constant_term_zeta_check(1, 0, 4, 2.5)
    r = constant_term_zeta_check(1, 0, 4, 2.5, at_pole="value")
    assert r.residual < 1e-12
    with pytest.raises(ValueError):
        constant_term_zeta_check(1, 0, 4, 2.5, at_pole="bogus")


@pytest.mark.parametrize("N,beta,kappa,s", [(1, 0, 2, 1.8), (2, 1, 2, 1.8), (3, 1, 3, 1.2 + 0.5j), (4, 2, 0, 0.9)])
def test_constant_term_identity(N, beta, kappa, s):
    assert constant_term_zeta_check(N, beta, kappa, s).residual < 1e-10


@pytest.mark.parametrize("N,b,kappa,s", [(1, 0, 2, 1.3), (3, 1, 1, 0.8 + 0.3j), (4, 3, 4, 1.7 - 0.5j)])
def test_zeta_plus_functional_equation(N, b, kappa, s):
    assert zeta_plus_fe_check(N, b, kappa, s).residual < 1e-10


def test_fe_guard():
    with pytest.raises(PoleAtOne):
        zeta_plus_fe_check(1, 0, 1, 0.0)


@pytest.mark.parametrize("kappa,s", [(0, 0.3), (2, -0.2 + 0.4j), (5, 1.1)])
def test_reflection_consequence(kappa, s):
    r = reflection_consequence_check(kappa, s)
    assert r.residual < 1e-11
    # independent evaluation of the right side
    want = mpmath.gamma(s + kappa) / (2 * mpmath.cos(mpmath.pi * s))
    assert abs(r.rhs - complex(want)) < 1e-12 * abs(want)


def test_reflection_guard():
    with pytest.raises(EvaluationAtPole):
        reflection_consequence_check(2, 0.5)


def test_sign_symmetry():
    assert max(zeta_sign_symmetry(N, c, k) for N in (1, 3, 4) for c in range(N) for k in (2, 3)) < 1e-12


def test_suite_passes():
    lines = run_suite(seed=3, grid_size=20)
    assert [ln.name for ln in lines][0] == "gamma_binomial_exact"
    assert all(ln.passed for ln in lines), [(ln.name, ln.max_residual) for ln in lines if not ln.passed]
    assert len(run_suite(exact_only=True)) == 1
