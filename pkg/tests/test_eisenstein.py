import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thetalift.eisenstein import (ConvergenceMarginViolated, EisParams, IllConditionedSplit, NodeCountTooSmall,
                                  VectorEisenstein, constant_term_split, coset_reps, coset_tail_bound, eval_E,
                                  eval_E_chi, fourier_coefficient, modularity_residual,
                                  scalar_constant_term_coefficient)
from thetalift.lattice import direct_sum
from thetalift.special import characters_mod
from thetalift.weil import S, T, MetaplecticElement

UU = direct_sum(["U", "U"])
A1A1 = direct_sum(["A1", "A1(-1)"])


def scalar_series(k, s, tau, B):
    """Brute-force sum of v^s / ((c tau + d)^k |c tau + d|^(2s)) over all coprime (c, d) with c^2 + d^2 <= B^2."""
    v = tau.imag
    total = 0j
    for c in range(-int(B), int(B) + 1):
        for d in range(-int(B), int(B) + 1):
            if c * c + d * d > B * B or math.gcd(c, d) != 1:
                continue
            w = c * tau + d
            total += v ** s / (w ** k * abs(w) ** (2 * s))
    return total


def test_coset_reps():
    reps = coset_reps(12.0)
    rows = [(g.c, g.d) for g in reps]
    assert len(rows) == len(set(rows))
    for g in reps:
        assert g.a * g.d - g.b * g.c == 1
        assert math.gcd(g.c, g.d) == 1 and g.c * g.c + g.d * g.d <= 144
        assert g.c > 0 or (g.c == 0 and abs(g.d) == 1)
    with pytest.raises(ValueError):
        coset_reps(0.5)


def test_scalar_series_against_brute_force():
    # trivial discriminant group: E is the scalar series over all coprime (c, d)
    tau = 0.1 + 1.2j
    val = eval_E(UU, EisParams.for_lattice(UU, 4, s=3.0), tau, B=30).values[0, 0]
    assert abs(val - scalar_series(4, 3.0, tau, 30)) < 1e-13


def test_frozen_value_uu():
    # computed once at B = 80 and frozen; the brute-force sum above agrees with it
    val = eval_E(UU, EisParams.for_lattice(UU, 4, s=3.0), 0.1 + 1.2j, B=80)
    assert abs(val.values[0, 0] - (3.8881868344054116 + 0.1486320171461948j)) < 1e-12
    assert val.tail_estimate[0] < 1e-14


@pytest.mark.parametrize("beta", [(0, 0), (1, 1)])
@pytest.mark.parametrize("g", [S, T, MetaplecticElement(2, 1, 1, 1), MetaplecticElement(1, 0, -3, 1)])
def test_modularity(beta, g):
    E = VectorEisenstein(A1A1, EisParams.for_lattice(A1A1, 4, beta, 2.0), 60)
    res, tail = modularity_residual(E, g, 0.15 + 0.9j)
    assert np.abs(res).max() <= tail + 1e-12


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.5, 0.5), st.floats(0.8, 2.0))
def test_modularity_under_s_property(x, y):
    E = VectorEisenstein(UU, EisParams.for_lattice(UU, 4, s=2.5), 40)
    res, tail = modularity_residual(E, S, complex(x, y))
    assert np.abs(res).max() <= tail + 1e-12


def test_constant_term_against_closed_form():
    # scalar case: a = 1 + (-1)^k = 2 and c0 from the Gamma / zeta closed form
    E = VectorEisenstein(UU, EisParams.for_lattice(UU, 4, s=2.5), 60)
    split = constant_term_split(E, (), 1.2, 2.5)
    assert abs(split.a - 2) < 1e-12
    assert abs(split.c0 - scalar_constant_term_coefficient(4, 2.5)) < 1e-11


def test_constant_term_vector_valued():
    # e_beta + (-1)^k e_-beta on the component beta (here beta = -beta)
    E = VectorEisenstein(A1A1, EisParams.for_lattice(A1A1, 4, (1, 1), 2.0), 60)
    assert abs(constant_term_split(E, (1, 1), 1.2, 2.5).a - 2) < 1e-10
    assert abs(constant_term_split(E, (0, 0), 1.2, 2.5).a) < 1e-10


@settings(max_examples=5, deadline=None)
@given(st.floats(0.0, 1.0))
def test_fourier_reconstruction_of_shifted_component(u):
    # the component gamma with q(gamma) = 1/4 has frequencies in 1/4 + Z
    E = VectorEisenstein(A1A1, EisParams.for_lattice(A1A1, 4, (0, 0), 2.0), 40)
    v = 1.1
    ns = 0.25 + np.arange(-12, 13)
    coeffs = np.array([fourier_coefficient(E, (1, 0), n, v, nodes=128).value for n in ns])
    series = np.sum(coeffs * np.exp(2j * np.pi * ns * u))
    assert abs(series - E(u + 1j * v)[0, E.D.index[(1, 0)]]) < 1e-9


def test_eval_chi_trivial_character():
    chi = characters_mod(1)[0]
    tau = 0.2 + 1.1j
    a = eval_E_chi(A1A1, 4, (0, 0), chi, 2.0, tau, 20)
    b = VectorEisenstein(A1A1, EisParams.for_lattice(A1A1, 4, (0, 0), 2.0), 20)(tau)
    assert np.allclose(a, b)


def test_tail_bound_decreases():
    assert coset_tail_bound(3.0, 4, 100) < coset_tail_bound(3.0, 4, 50)


def test_errors():
    with pytest.raises(ConvergenceMarginViolated):
        VectorEisenstein(UU, EisParams.for_lattice(UU, 0, s=0.5))
    E = VectorEisenstein(UU, EisParams.for_lattice(UU, 4, s=2.5), 10)
    with pytest.raises(NodeCountTooSmall):
        fourier_coefficient(E, (), 0, 1.0, nodes=2)
    with pytest.raises(IllConditionedSplit):
        constant_term_split(E, (), 1.0, 1.0000001)
    with pytest.raises(ValueError):
        EisParams.for_lattice(A1A1, 4, (1, 0), 2.0)
    with pytest.raises(ValueError):
        EisParams.for_lattice(direct_sum(["A1"]), 4)
