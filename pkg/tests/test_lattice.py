import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from thetalift.acceptance import box_isotropic_dual
from thetalift.lattice import (LatticeError, NotSymmetric, OddDiagonal, Singular, ZeroVector, build_lattice,
                               direct_sum, discriminant_form, ellipsoid_points, enumerate_isotropic_vectors,
                               frac_det, integer_kernel, isotropic_classes, lattice_from_dict, level_of, load_lattice,
                               make_cusp, pi_class_map, pi_sublattice_data, smith_normal_form, split_hyperbolic)
from thetalift.theta import standard_frame


@st.composite
def even_grams(draw, max_rank=4):
    n = draw(st.integers(1, max_rank))
    g = [[0] * n for _ in range(n)]
    for i in range(n):
        g[i][i] = 2 * draw(st.integers(-3, 3))
        for j in range(i + 1, n):
            g[i][j] = g[j][i] = draw(st.integers(-3, 3))
    assume(frac_det(g) != 0)
    return g


def test_block_names():
    L = direct_sum(["U", "U(3)", "A1", "A1(-1)"])
    assert L.rank == 6
    assert L.signature == (3, 3)
    assert L.gram[2][3] == 3
    assert L.det == -36


def test_construction_errors():
    with pytest.raises(OddDiagonal):
        build_lattice([[1]])
    with pytest.raises(Singular):
        build_lattice([[2, 2], [2, 2]])
    with pytest.raises(NotSymmetric):
        build_lattice([[2, 1], [0, 2]])
    with pytest.raises(LatticeError):
        direct_sum(["E8"])


def test_lattice_json_round_trip(tmp_path):
    path = tmp_path / "l.json"
    path.write_text(json.dumps({"name": "UU", "gram": [[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]}))
    L = load_lattice(path)
    assert L.name == "UU" and L.signature == (2, 2)
    M = lattice_from_dict({"name": "mix", "blocks": ["U", [[2]], "A1(-1)"]})
    assert M.gram == direct_sum(["U", "A1", "A1(-1)"]).gram
    with pytest.raises(LatticeError):
        lattice_from_dict({"name": "empty"})


@settings(max_examples=60, deadline=None)
@given(st.lists(st.lists(st.integers(-6, 6), min_size=3, max_size=3), min_size=3, max_size=3))
def test_smith_normal_form(a):
    u, d, v = smith_normal_form(a)
    A, U, D, V = (np.array(x, dtype=object) for x in (a, u, d, v))
    assert (U.dot(A).dot(V) == D).all()
    assert abs(frac_det(u)) == 1 and abs(frac_det(v)) == 1
    diag = [d[i][i] for i in range(3)]
    assert all(d[i][j] == 0 for i in range(3) for j in range(3) if i != j)
    assert all(x >= 0 for x in diag)
    for x, y in zip(diag, diag[1:]):
        assert (x == 0 and y == 0) or (x != 0 and y % x == 0)


def test_integer_kernel():
    rows = [[1, 2, 3, 4], [0, 1, 1, 1]]
    ker = integer_kernel(rows)
    assert len(ker) == 2
    assert all(sum(a * b for a, b in zip(r, k)) == 0 for r in rows for k in ker)


@pytest.mark.parametrize("blocks,q_values", [
    (["A1"], {Fraction(0), Fraction(1, 4)}),
    (["A1(-1)"], {Fraction(0), Fraction(3, 4)}),
    (["U"], {Fraction(0)}),
    (["A1", "A1(-1)"], {Fraction(0), Fraction(1, 4), Fraction(3, 4)}),
])
def test_discriminant_values(blocks, q_values):
    D = discriminant_form(direct_sum(blocks))
    assert set(D.q_values.values()) == q_values


def test_isotropic_classes_of_two_a1():
    D = discriminant_form(direct_sum(["A1", "A1(-1)"]))
    iso = isotropic_classes(D)
    assert len(D) == 4 and len(iso) == 2
    assert D.zero in iso


@settings(max_examples=50, deadline=None)
@given(even_grams())
def test_discriminant_form_properties(g):
    L = build_lattice(g)
    D = discriminant_form(L)
    assert len(D) == abs(L.det)
    assert math.prod(D.orders) == abs(L.det)
    for e in D.elements:
        assert D.reduce(D.lift(e)) == e
        assert D.add(e, D.neg(e)) == D.zero
        # q(-e) = q(e) and the polarization identity
        assert D.q(D.neg(e)) == D.q(e)
    for a, b in itertools.islice(itertools.product(D.elements, repeat=2), 50):
        lhs = (D.q(D.add(a, b)) - D.q(a) - D.q(b)) % 1
        assert lhs == D.bilinear(a, b)


@settings(max_examples=30, deadline=None)
@given(even_grams(3))
def test_reduce_many_matches_reduce(g):
    L = build_lattice(g)
    D = discriminant_form(L)
    det = abs(L.det)
    rng = np.random.default_rng(0)
    # rows y with lam = G^{-1} y in L'; give them as (det * lam) / det
    ys = rng.integers(-5, 6, size=(20, L.rank))
    adj = np.round(L.gram_inverse_array * L.det).astype(np.int64) * np.sign(L.det)
    vecs = ys @ adj.T
    got = D.reduce_many(vecs, det)
    want = [D.reduce([Fraction(int(x), det) for x in v]) for v in vecs]
    assert got == want


def test_level_of():
    L = direct_sum(["U", "U(2)"])
    assert level_of((1, 0, 0, 0), L) == 1
    assert level_of((0, 0, 1, 0), L) == 2
    with pytest.raises(ZeroVector):
        level_of((0, 0, 0, 0), L)


def test_ellipsoid_points_against_box():
    m = np.array([[2.0, 0.5, 0.0], [0.5, 1.5, 0.2], [0.0, 0.2, 1.0]])
    got = {tuple(p) for p in ellipsoid_points(m, 3.0)}
    want = {p for p in itertools.product(range(-4, 5), repeat=3) if np.array(p) @ m @ np.array(p) / 2 <= 3.0}
    assert got == want


def test_isotropic_vectors_of_U():
    # the isotropic vectors of U are (a, 0) and (0, b)
    L = direct_sum(["U"])
    recs = enumerate_isotropic_vectors(L, np.eye(2) * 2, 9.0)
    vecs = {tuple(int(x) for x in r.vector) for r in recs}
    assert vecs == {(a, 0) for a in range(-3, 4) if a} | {(0, b) for b in range(-3, 4) if b}
    prim = {tuple(int(x) for x in r.vector) for r in recs if r.primitive}
    assert prim == {(1, 0), (-1, 0), (0, 1), (0, -1)}


@pytest.mark.parametrize("blocks,bound", [(["U", "A1(-1)"], 8.0), (["A1", "A1(-1)"], 10.0),
                                          (["U(2)", "A1(-1)"], 6.0), (["U", "U"], 5.0)])
def test_isotropic_dual_vectors_against_box(blocks, bound):
    L = direct_sum(blocks)
    M = standard_frame(L, perturbation=0.05 * np.ones((L.b_plus, L.rank))).majorant_gram()
    recs = enumerate_isotropic_vectors(L, M, bound)
    got = {tuple(int(x * L.det) for x in r.vector) for r in recs}
    assert got == box_isotropic_dual(L, M, bound)
    for r in recs:
        assert L.q(r.vector) == 0
        assert L.in_dual(r.vector) and L.in_dual(r.primitive_part)
        assert r.primitive == (r.multiplier == 1)


def test_split_hyperbolic_cusp():
    L = direct_sum(["U", "U", "A1(-1)"])
    cusp = split_hyperbolic(L)
    assert cusp.N_z == 1
    assert L.q(cusp.z) == 0 and L.bilinear(cusp.z, cusp.z_prime) == 1
    assert cusp.K.signature == (1, 2)
    assert len(discriminant_form(cusp.K)) == len(discriminant_form(L))
    for row in cusp.K_basis:
        assert L.bilinear(row, cusp.z) == 0 and L.bilinear(row, cusp.z_prime) == 0


def test_level_two_cusp_counts():
    # |L'/L| = N_z^2 |K'/K|, and pi has fibres of size N_z over K'/K
    L = direct_sum(["U", "U(2)", "A1(-1)"])
    cusp = make_cusp(L, (0, 0, 1, 0, 0))
    assert cusp.N_z == 2
    DK = discriminant_form(cusp.K)
    assert len(discriminant_form(L)) == 4 * len(DK)
    data = pi_sublattice_data(cusp)
    assert len(data.classes) == len(discriminant_form(L)) // 2
    assert all(len(f) == 2 for f in data.fibers.values())
    D = discriminant_form(L)
    cls = pi_class_map(cusp.z, L)
    assert cls != D.zero and D.q(cls) == 0


def test_make_cusp_rejects_bad_vectors():
    L = direct_sum(["U", "U"])
    with pytest.raises(LatticeError):
        make_cusp(L, (1, 1, 0, 0))
    with pytest.raises(LatticeError):
        make_cusp(L, (2, 0, 0, 0))
