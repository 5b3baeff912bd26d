import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thetalift.lattice import direct_sum, split_hyperbolic
from thetalift.lift import _theta_radius
from thetalift.special import e_of
from thetalift.theta import (DegenerateFrame, HomoPoly, ThetaShift, frame_from_plus_vectors, k_expansion_rhs,
                             p_omega_decompose, standard_frame, theta_component, theta_full,
                             transformation_residual)
from thetalift.weil import S, T, MetaplecticElement


def test_homopoly_algebra():
    x = HomoPoly.variable(2, 0)
    y = HomoPoly.variable(2, 1)
    p = (x + y.scale(1j)) ** 3
    pts = np.array([[0.3, -1.2], [2.0, 0.5]])
    assert np.allclose(p(pts), (pts[:, 0] + 1j * pts[:, 1]) ** 3)
    assert p.degree() == 3
    assert (p - p).is_zero()
    assert np.allclose(p.conj()(pts), np.conj(p(pts)))


@pytest.mark.parametrize("kappa", [1, 2, 5])
def test_holomorphic_power_is_harmonic(kappa):
    assert HomoPoly.holomorphic_power(3, kappa).laplacian().is_zero(1e-12)


def test_heat_operator_on_square():
    # exp(-Delta / (8 pi v)) x^2 = x^2 - 1 / (4 pi v)
    p = HomoPoly.variable(1, 0) ** 2
    v = 0.7
    h = p.heat(v)
    assert abs(h.terms[(0,)] + 1 / (4 * math.pi * v)) < 1e-15
    assert h.terms[(2,)] == 1
    series = p.heat_series()
    assert abs(series[1].terms[(0,)] + 1 / (4 * math.pi)) < 1e-15


def test_substitute_and_split():
    p = HomoPoly.holomorphic_power(2, 2)
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    q = p.substitute(a)
    pts = np.array([[0.4, 0.9]])
    assert np.allclose(q(pts), p(pts @ a.T))
    parts = p.split_first_variable()
    assert set(parts) == {0, 1, 2}


def test_theta_a1_against_jacobi():
    # A1: theta_0 = sum q^(n^2), theta_1 = sum q^((n + 1/2)^2) with q = e(tau)
    L = direct_sum(["A1"])
    fr = standard_frame(L)
    p = HomoPoly.constant(1)
    tau = 0.13 + 0.71j
    q = complex(e_of(tau))
    v0, _ = theta_component(L, (0,), tau, fr, p, 30)
    v1, _ = theta_component(L, (1,), tau, fr, p, 30)
    assert abs(v0[0] - complex(mpmath.jtheta(3, 0, q))) < 1e-14
    assert abs(v1[0] - complex(mpmath.jtheta(2, 0, q))) < 1e-14


def test_theta_negative_definite_is_antiholomorphic():
    # A1(-1): theta_0(tau) = conj(theta_3(e(tau)))
    L = direct_sum(["A1(-1)"])
    fr = standard_frame(L)
    tau = -0.2 + 0.9j
    v, _ = theta_component(L, (0,), tau, fr, HomoPoly.constant(1), 30)
    assert abs(v[0] - np.conj(complex(mpmath.jtheta(3, 0, complex(e_of(tau)))))) < 1e-14


def test_theta_full_shape_and_tail():
    L = direct_sum(["A1", "A1(-1)"])
    vals, tail = theta_full(L, [0.1 + 1j, 0.2 + 2j], standard_frame(L), HomoPoly.constant(2), 12)
    assert vals.shape == (2, 4)
    assert tail < 1e-10


CASES = [
    (["A1"], HomoPoly.variable(1, 0) ** 2),
    (["A1"], HomoPoly.variable(1, 0) ** 3),
    (["U", "U"], HomoPoly.holomorphic_power(2, 2).extend(4, [0, 1])),
    (["U", "A1(-1)"], HomoPoly.variable(3, 0)),
    (["A1", "A1(-1)"], HomoPoly.constant(2)),
    (["U", "U", "A1(-1)"], HomoPoly.holomorphic_power(2, 3).extend(5, [0, 1])),
]


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(range(len(CASES))), st.floats(-0.5, 0.5), st.floats(0.75, 1.5),
       st.sampled_from([S, T, MetaplecticElement(1, 0, 1, 1), MetaplecticElement(2, 1, 1, 1)]),
       st.sampled_from([-1, 1]))
def test_transformation_law(case, x, y, g, heat_sign):
    # holds for both signs of the heat operator when p is harmonic; for x^2 only the minus sign
    blocks, p = CASES[case]
    if heat_sign == 1 and not p.laplacian().is_zero():
        heat_sign = -1
    L = direct_sum(blocks)
    tau = complex(x, y)
    rng = np.random.default_rng(case)
    fr = standard_frame(L, perturbation=0.1 * rng.standard_normal((L.b_plus, L.rank)))
    shift = ThetaShift(0.3 * rng.standard_normal(L.rank), 0.3 * rng.standard_normal(L.rank))
    v_min = min(y, g.act(tau).imag)
    R = _theta_radius(L, p, v_min, 1e-12)
    assert transformation_residual(L, g, tau, fr, p, R, shift, heat_sign) < 1e-8


def test_wrong_heat_sign_breaks_the_law():
    L = direct_sum(["A1"])
    p = HomoPoly.variable(1, 0) ** 2
    fr = standard_frame(L)
    tau = 0.1 + 0.8j
    assert transformation_residual(L, S, tau, fr, p, 12, heat_sign=-1) < 1e-10
    assert transformation_residual(L, S, tau, fr, p, 12, heat_sign=1) > 1e-3


def test_omega_decomposition_reconstructs():
    rng = np.random.default_rng(1)
    L = direct_sum(["U", "U"])
    cusp = split_hyperbolic(L)
    fr = standard_frame(L, perturbation=0.2 * rng.standard_normal((2, 4)))
    for p in [HomoPoly.holomorphic_power(4, 4), HomoPoly.variable(4, 0) ** 2 + HomoPoly.variable(4, 1) ** 2]:
        dec = p_omega_decompose(p, fr, cusp.z)
        lam = rng.standard_normal((20, 4))
        assert np.abs(dec.reconstruct(lam, fr.gram) - p(fr.coords(lam))).max() < 1e-10
    with pytest.raises(ValueError):
        p_omega_decompose(HomoPoly.variable(4, 3), fr, cusp.z)


@pytest.mark.parametrize("tau", [1j, 0.3 + 0.7j])
@pytest.mark.parametrize("kappa", [0, 2, 4])
def test_k_expansion(tau, kappa):
    rng = np.random.default_rng(1)
    L = direct_sum(["U", "U"])
    cusp = split_hyperbolic(L)
    fr = standard_frame(L, perturbation=0.2 * rng.standard_normal((2, 4)))
    p = HomoPoly.holomorphic_power(4, kappa) if kappa else HomoPoly.constant(4)
    lhs, _ = theta_component(L, (), tau, fr, p, 25)
    rhs = k_expansion_rhs(L, (), tau, fr, p, cusp, cd_bound=8, R=25)
    assert abs(lhs[0] - rhs) <= 1e-9 * max(abs(lhs[0]), 1)


def test_frame_checks():
    L = direct_sum(["U", "A1(-1)"])
    fr = frame_from_plus_vectors(L.gram_array, np.array([[1.0, 1.0, 0.0]]))
    assert fr.orthonormality_error() < 1e-12
    lam = np.array([[1.0, 2.0, 0.5]])
    # q(lam) = q(lam+) + q(lam-)
    c = fr.coords(lam)[0]
    assert abs(0.5 * (c[0] ** 2 - c[1] ** 2 - c[2] ** 2) - 0.5 * lam[0] @ L.gram_array @ lam[0]) < 1e-12
    with pytest.raises((DegenerateFrame, ValueError, np.linalg.LinAlgError)):
        frame_from_plus_vectors(L.gram_array, np.array([[1.0, 0.0, 0.0]]))
