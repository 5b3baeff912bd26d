import cmath

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thetalift.lattice import direct_sum, discriminant_form
from thetalift.special import principal_sqrt
from thetalift.weil import (IDENTITY, S, T, Z, MetaplecticElement, T_power, WeilRepresentation, mp2_inverse,
                            mp2_mul, reduce_to_fundamental_domain, rho_evaluate, rho_generators, slash)

LATTICES = [["A1"], ["A1(-1)"], ["U"], ["A1", "A1(-1)"], ["A1", "A1"], ["U(3)"], ["U", "U", "A1(-1)", "A1(-1)"],
            [[[2, 1], [1, 2]]]]


def words():
    return st.lists(st.sampled_from(["S", "T", "t"]), min_size=0, max_size=8)


def element(word):
    g = IDENTITY
    for w in word:
        g = mp2_mul(g, {"S": S, "T": T, "t": T_power(-1)}[w])
    return g


@pytest.mark.parametrize("blocks", LATTICES)
def test_generator_relations(blocks):
    rep = WeilRepresentation(discriminant_form(direct_sum(blocks)))
    Zf = rep.z_formula()
    st_ = rep.S @ rep.T
    assert np.abs(rep.S @ rep.S - Zf).max() < 1e-12
    assert np.abs(st_ @ st_ @ st_ - Zf).max() < 1e-12
    assert np.abs(rep.S @ rep.S.conj().T - np.eye(rep.dim)).max() < 1e-12
    # Z^4 = 1 and rho(Z)^2 = (-1)^(b+ - b-) on the group algebra
    Z2 = Zf @ Zf
    b_plus, b_minus = rep.signature
    assert np.abs(Z2 - (-1) ** (b_plus - b_minus) * np.eye(rep.dim)).max() < 1e-12


def test_s_matrix_for_a1():
    # rho(S) on C[Z/2] for A1: e(-1/8) / sqrt(2) [[1, 1], [1, -1]]
    T_, S_ = rho_generators(discriminant_form(direct_sum(["A1"])))
    want = cmath.exp(-2j * cmath.pi / 8) / np.sqrt(2) * np.array([[1, 1], [1, -1]])
    assert np.abs(S_ - want).max() < 1e-15
    assert np.allclose(np.diag(T_), [1, 1j])


def test_metaplectic_product_branch():
    # S^2 = Z = (-I, i), S^4 = (I, -1), S^8 = 1
    S2 = mp2_mul(S, S)
    assert (S2.a, S2.d, S2.branch_sign) == (-1, -1, 1) and S2 == Z
    S4 = mp2_mul(S2, S2)
    assert S4.matrix == ((1, 0), (0, 1)) and S4.branch_sign == -1
    assert mp2_mul(S4, S4) == IDENTITY


@settings(max_examples=40, deadline=None)
@given(words(), words(), words())
def test_mp2_associative(w1, w2, w3):
    a, b, c = element(w1), element(w2), element(w3)
    assert mp2_mul(mp2_mul(a, b), c) == mp2_mul(a, mp2_mul(b, c))
    assert mp2_mul(a, mp2_inverse(a)) == IDENTITY


@settings(max_examples=40, deadline=None)
@given(words(), words(), st.sampled_from(LATTICES[:6]))
def test_rho_is_a_homomorphism(w1, w2, blocks):
    rep = WeilRepresentation(discriminant_form(direct_sum(blocks)))
    a, b = element(w1), element(w2)
    lhs = rep.evaluate(mp2_mul(a, b))
    rhs = rep.evaluate(a) @ rep.evaluate(b)
    assert np.abs(lhs - rhs).max() < 1e-11


def test_evaluate_on_generators():
    rep = WeilRepresentation(discriminant_form(direct_sum(["A1", "A1(-1)"])))
    assert np.abs(rep.evaluate(S) - rep.S).max() < 1e-14
    assert np.abs(rep.evaluate(T) - rep.T).max() < 1e-14
    assert np.abs(rep.evaluate(T_power(5)) - rep.t_power(5)).max() < 1e-13
    g = MetaplecticElement(2, 1, 1, 1)
    assert np.abs(rho_evaluate(g, rep.D) - rep.evaluate(g)).max() < 1e-14


def test_slash_inverts_transformation():
    rep = WeilRepresentation(discriminant_form(direct_sum(["A1"])))
    g = MetaplecticElement(1, 0, 3, 1)
    tau = 0.1 + 0.9j
    f = np.array([1.0 + 2j, -0.5j])
    # if f(g tau) = phi^(2k) rho(g) f(tau) then the slash returns f(tau)
    k = 3
    f_g = g.phi(tau) ** (2 * k) * (rep.evaluate(g) @ f)
    assert np.allclose(slash(f_g, g, k, tau, rep), f)


@settings(max_examples=50, deadline=None)
@given(st.floats(-20, 20), st.floats(0.01, 5))
def test_reduce_to_fundamental_domain(x, y):
    g, w = reduce_to_fundamental_domain(complex(x, y))
    assert abs(w.real) <= 0.5 + 1e-12 and abs(w) >= 1 - 1e-9
    assert abs(g.act(complex(x, y)) - w) < 1e-8 * max(1, abs(w))


def test_element_validation():
    with pytest.raises(ValueError):
        MetaplecticElement(1, 1, 1, 1)
    with pytest.raises(ValueError):
        MetaplecticElement(1, 0, 0, 1, 2)
    assert Z.phi(0.3 + 1j) == principal_sqrt(-1)
