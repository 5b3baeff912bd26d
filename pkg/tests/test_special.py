import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thetalift.special import (PoleAtNonPositiveInteger, PoleAtOne, PrecisionConfig, UnderflowToZero, bessel_k,
                               characters_mod, cpow, e_of, gamma, hurwitz_zeta, log_gamma, principal_sqrt,
                               rgamma, riemann_zeta, zeta_plus, zeta_signed)

mpmath.mp.dps = 30


def rel(a, b):
    return abs(complex(a) - complex(b)) / max(abs(complex(b)), 1e-300)


finite = dict(allow_nan=False, allow_infinity=False)


@settings(max_examples=80, deadline=None)
@given(st.floats(-6.5, 12.0, **finite), st.floats(-8.0, 8.0, **finite))
def test_gamma_against_mpmath(x, y):
    s = complex(x, y)
    if abs(y) < 1e-3 and x < 0.5 and abs(x - round(x)) < 1e-3:
        return
    assert rel(gamma(s), mpmath.gamma(mpmath.mpc(x, y))) < 5e-13


def test_gamma_integers_are_factorials():
    for n in range(1, 15):
        assert gamma(n) == math.factorial(n - 1)


def test_gamma_poles_and_reciprocal():
    for n in range(0, 5):
        with pytest.raises(PoleAtNonPositiveInteger):
            gamma(-n)
        assert rgamma(-n) == 0
    s = 0.3 + 2.1j
    assert abs(rgamma(s) * gamma(s) - 1) < 1e-14
    assert abs(cmath.exp(log_gamma(s)) - gamma(s)) < 1e-14


@settings(max_examples=60, deadline=None)
@given(st.floats(-4.0, 8.0, **finite), st.floats(-15.0, 15.0, **finite), st.floats(0.05, 1.0, **finite))
def test_hurwitz_against_mpmath(x, y, a):
    s = complex(x, y)
    if abs(s - 1) < 0.05 or x < -0.5:
        return
    want = mpmath.zeta(mpmath.mpc(x, y), a)
    assert abs(hurwitz_zeta(s, a) - complex(want)) < 1e-11 * max(1.0, abs(complex(want)))


@settings(max_examples=60, deadline=None)
@given(st.floats(-12.0, 8.0, **finite), st.floats(-20.0, 20.0, **finite))
def test_riemann_zeta_against_mpmath(x, y):
    s = complex(x, y)
    if abs(s - 1) < 0.05:
        return
    want = complex(mpmath.zeta(mpmath.mpc(x, y)))
    assert abs(riemann_zeta(s) - want) < 5e-12 * max(1.0, abs(want))


def test_zeta_special_values():
    assert rel(riemann_zeta(2), math.pi ** 2 / 6) < 1e-15
    assert rel(riemann_zeta(0), -0.5) < 1e-14
    assert rel(riemann_zeta(-1), -1 / 12) < 1e-14
    assert abs(riemann_zeta(-4)) < 1e-15
    with pytest.raises(PoleAtOne):
        riemann_zeta(1)


@pytest.mark.parametrize("N,c", [(1, 0), (2, 1), (3, 2), (4, 3), (5, 0)])
def test_zeta_plus_against_direct_sum(N, c):
    s = 3.3 + 0.4j
    n = np.arange(1, 200001)
    n = n[n % N == c % N]
    direct = np.sum(np.exp(-s * np.log(n.astype(float))))
    # tail of the direct sum is about (count / N) * M^(1 - s) / (s - 1)
    assert abs(zeta_plus(N, c, s) - direct) < 1e-10


@pytest.mark.parametrize("s", [-2.7 + 0.3j, -0.8, -5.5 + 2j, 0.4 + 3j])
def test_zeta_plus_continuation_against_mpmath(s):
    for N, c in [(3, 1), (4, 2), (5, 0), (6, 5)]:
        c0 = c % N or N
        want = complex(mpmath.power(N, -s) * mpmath.zeta(s, mpmath.mpf(c0) / N))
        assert abs(zeta_plus(N, c, s) - want) < 1e-11 * max(1.0, abs(want))


def test_zeta_signed_definition():
    s = 1.7 + 0.2j
    expected = zeta_plus(5, 2, s) + cmath.exp(-1j * math.pi * s) * zeta_plus(5, 3, s)
    assert zeta_signed(5, 2, s) == expected


@pytest.mark.parametrize("nu,x", [(0.0, 1.0), (0.5, 2.0), (2.5 + 1.5j, 0.7), (-3.2j, 4.0), (7.0, 0.3), (1.5, 30.0)])
def test_bessel_k_against_mpmath(nu, x):
    want = complex(mpmath.besselk(nu, x))
    assert rel(bessel_k(nu, x), want) < 1e-11


def test_bessel_k_half_integer_closed_form():
    x = 1.3
    assert rel(bessel_k(0.5, x), math.sqrt(math.pi / (2 * x)) * math.exp(-x)) < 1e-13


def test_bessel_k_errors():
    with pytest.raises(ValueError):
        bessel_k(1.0, 0.0)
    with pytest.raises(UnderflowToZero):
        bessel_k(1.0, 800.0)


def test_principal_sqrt_branch():
    assert principal_sqrt(-1) == 1j
    assert principal_sqrt(complex(-4, -0.0)) == 2j
    arr = principal_sqrt(np.array([-1.0, 4.0, 1j]))
    assert np.allclose(arr, [1j, 2, cmath.sqrt(1j)])
    assert abs(cpow(-8, 1 / 3) - 2 * cmath.exp(1j * math.pi / 3)) < 1e-14


def test_e_of():
    assert abs(e_of(0.25) - 1j) < 1e-15
    assert np.allclose(e_of(np.array([0.5, 1.0])), [-1, 1])


@pytest.mark.parametrize("N", [1, 2, 3, 4, 5, 8, 12, 15])
def test_characters_orthogonality(N):
    chars = characters_mod(N)
    phi = sum(1 for a in range(N) if math.gcd(a, N) == 1)
    assert len(chars) == phi
    units = [a for a in range(N) if math.gcd(a, N) == 1] if N > 1 else [0]
    gram = np.array([[sum(x(a) * np.conj(y(a)) for a in units) for y in chars] for x in chars])
    assert np.allclose(gram, phi * np.eye(phi))
    assert sum(c.is_trivial() for c in chars) == 1
    for chi in chars:
        for a in units:
            for b in units:
                assert abs(chi(a * b) - chi(a) * chi(b)) < 1e-12


def test_precision_config_validation():
    with pytest.raises(ValueError):
        PrecisionConfig(target_rel_error=0.1)
    with pytest.raises(ValueError):
        PrecisionConfig(bernoulli_depth=0)
