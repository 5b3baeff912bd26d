import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thetalift.eisenstein import ConvergenceMarginViolated
from thetalift.lattice import LatticeError, direct_sum
from thetalift.orthogonal import (NoCuspInK, NotInDomain, OrbitIdentificationUnavailable, act, check_two_hyperbolic,
                                  cusp_classes, eichler_transform, eisenstein_direct, j_factor, majorant_frame,
                                  majorant_gram, make_domain, orth_transform)

UU = direct_sum(["U", "U"])
L6 = direct_sum(["U", "U", "A1", "A1(-1)"])


@pytest.fixture(scope="module")
def dom():
    return make_domain(UU)


def tube_points():
    return st.tuples(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.3, 2.0), st.floats(0.3, 2.0))


@settings(max_examples=40, deadline=None)
@given(tube_points())
def test_tube_point_geometry(pt):
    dom = make_domain(UU)
    x1, x2, y1, y2 = pt
    Z = dom.point([x1, x2], [y1, y2])
    zl = Z.Z_L
    g = dom.gram
    assert abs(zl @ g @ zl) < 1e-10 * max(1, np.abs(zl).max() ** 2)
    # (Z_L, conj Z_L) = 4 q(Y) and (Z_L, z) = 1
    assert abs(zl @ g @ zl.conj() - 4 * Z.q_Y) < 1e-10 * max(1, np.abs(zl).max() ** 2)
    assert abs(zl @ g @ dom.z - 1) < 1e-12
    M = majorant_gram(Z)
    assert np.linalg.eigvalsh(M).min() > 0
    assert majorant_frame(Z).orthonormality_error() < 1e-9
    assert np.abs(majorant_frame(Z).majorant_gram() - M).max() < 1e-8 * np.abs(M).max()


def test_domain_membership(dom):
    assert dom.in_domain([1.0, 1.0])
    assert not dom.in_domain([-1.0, -1.0])
    with pytest.raises(NotInDomain):
        dom.point([0, 0], [1.0, -1.0])


def test_anisotropic_K():
    L = direct_sum(["U", "A1", "A1(-3)"])
    with pytest.raises(NoCuspInK):
        make_domain(L, strict=True)
    d = make_domain(L)
    assert not d.cusp_in_K
    assert d.in_domain([1.0, 0.1]) and not d.in_domain([-1.0, 0.1])


def test_orth_transform_validation():
    with pytest.raises(LatticeError):
        orth_transform(UU, [[1, 1, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    swap = orth_transform(UU, [[0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0]])
    # swapping the two planes swaps e1+f1 and e2+f2, reversing the orientation
    assert not swap.plus_oriented
    assert orth_transform(UU, -np.eye(4, dtype=int)).plus_oriented
    assert (swap @ swap).plus_oriented
    minus = orth_transform(UU, [[-1, 0, 0, 0], [0, -1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    assert not minus.plus_oriented
    with pytest.raises(NotInDomain):
        act(minus, make_domain(UU).point([0, 0], [1, 1]))


EICHLER = [((1, 0, 0, 0), (0, 0, 1, 0)), ((0, 0, 1, 0), (0, 1, 0, 0)), ((0, 0, 1, 0), (1, 0, 1, 0)),
           ((0, 1, 0, 0), (0, 0, 1, -1))]


def test_cocycle(dom):
    Z = dom.point([0.1, 0.3], [1.0, 1.2])
    s1 = eichler_transform(UU, *EICHLER[1])
    s2 = eichler_transform(UU, *EICHLER[2])
    prod = s1 @ s2
    lhs = j_factor(prod, Z)
    rhs = j_factor(s1, act(s2, Z)) * j_factor(s2, Z)
    assert abs(lhs - rhs) < 1e-12
    W1 = act(prod, Z)
    W2 = act(s1, act(s2, Z))
    assert np.allclose(W1.X, W2.X) and np.allclose(W1.Y, W2.Y)


@pytest.mark.parametrize("e,x", EICHLER)
def test_orbit_sum_is_modular(dom, e, x):
    # G(sigma Z) = j(sigma, Z)^kappa G(Z) for sigma in the discriminant kernel
    sigma = eichler_transform(UU, e, x)
    Z = dom.point([0.1, 0.3], [1.0, 1.0])
    W = act(sigma, Z)
    j = j_factor(sigma, Z)
    g0 = eisenstein_direct(4, (), Z, 2.5, 800).value
    g1 = eisenstein_direct(4, (), W, 2.5, 800).value
    assert abs(g1 - j ** 4 * g0) < 1e-9 * abs(g1)


def test_orbit_sum_frozen_value(dom):
    # frozen from a run at height 2000 (agrees with height 800 to 6e-14)
    Z = dom.point([0.1, 0.3], [1.0, 1.0])
    r = eisenstein_direct(4, (), Z, 2.5, 800)
    assert abs(r.value - (3.6741460459575768 + 2.6202235864913317j)) < 1e-10
    assert r.tail_estimate < 1e-9


def test_orbit_sum_against_box_enumeration(dom):
    # primitive isotropic vectors of U + U found by scanning a coordinate box
    Z = dom.point([0.1, 0.3], [1.0, 1.0])
    H = 40.0
    M = majorant_gram(Z)
    box = np.floor(np.sqrt(2 * H * np.diag(np.linalg.inv(M)))).astype(int)
    pts = np.array(list(itertools.product(*[range(-b, b + 1) for b in box])))
    g = UU.gram_array
    iso = np.einsum("ij,jk,ik->i", pts, g, pts) == 0
    prim = np.gcd.reduce(np.abs(pts), axis=1) == 1
    pts = pts[iso & prim]
    pts = pts[0.5 * np.einsum("ij,jk,ik->i", pts, M, pts) <= H]
    pair = pts @ (g @ Z.Z_L)
    want = np.sum(pair ** -4.0 * (Z.q_Y / np.abs(pair) ** 2) ** 2.5)
    got = eisenstein_direct(4, (), Z, 2.5, H)
    assert got.n_terms == len(pts)
    assert abs(got.value - want) < 1e-13 * abs(want)


def test_cusp_classes():
    classes = cusp_classes(L6)
    assert {c.delta for c in classes} == {(0, 0), (1, 1)}
    assert {c.delta: c.N_delta for c in classes} == {(0, 0): 1, (1, 1): 2}
    for c in classes:
        assert L6.q(c.representative.vector) == 0
    with pytest.raises(OrbitIdentificationUnavailable):
        check_two_hyperbolic(direct_sum(["U", "A1(-1)", "A1(-1)"]))


def test_orbit_sum_errors(dom):
    Z = dom.point([0.1, 0.3], [1.0, 1.0])
    with pytest.raises(ConvergenceMarginViolated):
        eisenstein_direct(0, (), Z, 0.5)
    with pytest.raises(OrbitIdentificationUnavailable):
        L = direct_sum(["U", "A1", "A1(-1)"])
        eisenstein_direct(4, (0, 0), make_domain(L).point([0.1, 0.0], [1.0, 0.2]), 2.5)
