"""Siegel theta functions with polynomial insertions.

Conventions.  An isometry ``nu`` of ``L ⊗ R`` onto ``R^(b+, b-)`` is
stored as an :class:`IsometryFrame`: orthonormal vectors ``e_i`` of
``nu+`` (``(e_i, e_i) = 1``) and ``f_j`` of ``nu-`` (``(f_j, f_j) = -1``).
The coordinates of ``lam`` are ``x_i = (lam, e_i)`` and ``y_j = -(lam, f_j)``,
so ``q(lam_nu+) = |x|^2 / 2`` and ``q(lam_nu-) = -|y|^2 / 2``.

The theta function is

    theta_gamma(tau, alpha, beta) = sum_{lam in gamma + L}
        exp(-Delta / 8 pi v)(p)(nu(lam + beta))
        * e(tau q((lam+beta)_nu+) + conj(tau) q((lam+beta)_nu-) - (lam + beta/2, alpha)).

The same sign of the heat operator is used with and without shifts (the
transformation law fails for non-harmonic ``p`` with the other sign).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import (CuspComplement, GramLattice, discriminant_form,
                      ellipsoid_points, k_projection)
from .special import e_of
from .weil import MetaplecticElement, WeilRepresentation


class DegenerateFrame(ValueError):
    pass


class RadiusTooSmallForTolerance(UserWarning):
    pass


# ------------------------------------------------------------ polynomials

class HomoPoly:
    """A polynomial in ``nvars`` variables stored as ``{exponents: coefficient}``."""

    def __init__(self, nvars: int, terms=None):
        self.nvars = nvars
        self.terms = {}
        for e, c in (terms or {}).items():
            e = tuple(int(x) for x in e)
            if len(e) != nvars:
                raise ValueError("exponent length does not match nvars")
            if c != 0:
                self.terms[e] = self.terms.get(e, 0) + complex(c)

    @classmethod
    def constant(cls, nvars: int, c=1.0) -> "HomoPoly":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "HomoPoly":
        e = [0] * nvars
        e[i] = 1
        return cls(nvars, {tuple(e): 1.0})

    @classmethod
    def linear(cls, coeffs) -> "HomoPoly":
        n = len(coeffs)
        return cls(n, {tuple(int(i == j) for j in range(n)): c for i, c in enumerate(coeffs)})

    @classmethod
    def holomorphic_power(cls, nvars: int, kappa: int) -> "HomoPoly":
        """``(x_1 + i x_2)^kappa``."""
        base = cls(nvars, {tuple(int(j == 0) for j in range(nvars)): 1.0,
                           tuple(int(j == 1) for j in range(nvars)): 1j})
        return base ** kappa

    def copy(self) -> "HomoPoly":
        return HomoPoly(self.nvars, dict(self.terms))

    def __add__(self, other: "HomoPoly") -> "HomoPoly":
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return HomoPoly(self.nvars, {e: c for e, c in out.items() if c != 0})

    def __sub__(self, other: "HomoPoly") -> "HomoPoly":
        return self + other.scale(-1)

    def scale(self, c) -> "HomoPoly":
        return HomoPoly(self.nvars, {e: c * x for e, x in self.terms.items()})

    def __mul__(self, other: "HomoPoly") -> "HomoPoly":
        out = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return HomoPoly(self.nvars, {e: c for e, c in out.items() if c != 0})

    def __pow__(self, n: int) -> "HomoPoly":
        out = HomoPoly.constant(self.nvars)
        for _ in range(n):
            out = out * self
        return out

    def conj(self) -> "HomoPoly":
        return HomoPoly(self.nvars, {e: complex(c).conjugate() for e, c in self.terms.items()})

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(abs(c) <= tol for c in self.terms.values())

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def laplacian(self) -> "HomoPoly":
        out = {}
        for e, c in self.terms.items():
            for i, a in enumerate(e):
                if a >= 2:
                    f = list(e)
                    f[i] -= 2
                    f = tuple(f)
                    out[f] = out.get(f, 0) + c * a * (a - 1)
        return HomoPoly(self.nvars, {e: c for e, c in out.items() if c != 0})

    def laplacian_powers(self) -> list:
        """``[p, Delta p, Delta^2 p, ...]`` up to the last nonzero power."""
        out = [self]
        while not out[-1].is_zero():
            out.append(out[-1].laplacian())
        return out[:-1] if len(out) > 1 else out

    def heat(self, v: float, sign: int = -1) -> "HomoPoly":
        """``exp(sign * Delta / (8 pi v)) p`` (a finite sum)."""
        out = HomoPoly(self.nvars)
        for j, q in enumerate(self.laplacian_powers()):
            out = out + q.scale((sign / (8 * math.pi * v)) ** j / math.factorial(j))
        return out

    def heat_series(self, sign: int = -1) -> list:
        """Polynomials ``P_j`` with ``exp(sign Delta / 8 pi v) p = sum_j P_j v^(-j)``."""
        return [q.scale((sign / (8 * math.pi)) ** j / math.factorial(j))
                for j, q in enumerate(self.laplacian_powers())]

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x))
        out = np.zeros(x.shape[0], dtype=complex)
        for e, c in self.terms.items():
            term = np.full(x.shape[0], c, dtype=complex)
            for i, a in enumerate(e):
                if a:
                    term = term * x[:, i] ** a
            out += term
        return out

    def substitute(self, a: np.ndarray) -> "HomoPoly":
        """The polynomial ``y -> p(a y)`` with ``a`` of shape ``(nvars, m)``."""
        a = np.asarray(a)
        m = a.shape[1]
        lin = [HomoPoly.linear(a[i]) for i in range(self.nvars)]
        out = HomoPoly(m)
        for e, c in self.terms.items():
            term = HomoPoly.constant(m, c)
            for i, k in enumerate(e):
                if k:
                    term = term * lin[i] ** k
            out = out + term
        return out

    def split_first_variable(self) -> dict:
        """``{h: P_h}`` with ``p(t, w) = sum_h t^h P_h(w)``."""
        out = {}
        for e, c in self.terms.items():
            h = e[0]
            out.setdefault(h, {})
            out[h][e[1:]] = out[h].get(e[1:], 0) + c
        return {h: HomoPoly(self.nvars - 1, t) for h, t in sorted(out.items())}

    def extend(self, nvars: int, positions) -> "HomoPoly":
        """Embed into more variables, variable ``i`` going to ``positions[i]``."""
        out = {}
        for e, c in self.terms.items():
            f = [0] * nvars
            for i, a in enumerate(e):
                f[positions[i]] = a
            out[tuple(f)] = c
        return HomoPoly(nvars, out)

    def __repr__(self) -> str:
        return f"HomoPoly({self.nvars}, {self.terms})"


# ----------------------------------------------------------------- frames

@dataclass
class IsometryFrame:
    """Orthonormal bases of ``nu+`` and ``nu-`` as rows in lattice coordinates."""

    gram: np.ndarray
    plus: np.ndarray
    minus: np.ndarray

    def __post_init__(self):
        self.gram = np.asarray(self.gram, dtype=float)
        self.plus = np.asarray(self.plus, dtype=float).reshape(-1, self.gram.shape[0])
        self.minus = np.asarray(self.minus, dtype=float).reshape(-1, self.gram.shape[0])

    @property
    def b_plus(self) -> int:
        return self.plus.shape[0]

    @property
    def b_minus(self) -> int:
        return self.minus.shape[0]

    def orthonormality_error(self) -> float:
        basis = np.vstack([self.plus, self.minus])
        target = np.diag([1.0] * self.b_plus + [-1.0] * self.b_minus)
        return float(np.abs(basis @ self.gram @ basis.T - target).max())

    def coords(self, lam: np.ndarray) -> np.ndarray:
        """``nu(lam)`` for rows ``lam``; shape ``(N, b+ + b-)``."""
        lam = np.atleast_2d(lam)
        g = lam @ self.gram
        return np.hstack([g @ self.plus.T, -(g @ self.minus.T)])

    def majorant_gram(self) -> np.ndarray:
        """Gram matrix of the majorant, ``q_nu(lam) = lam^T M lam / 2``."""
        p = self.plus @ self.gram
        m = self.minus @ self.gram
        return p.T @ p + m.T @ m

    def plus_projection(self, lam) -> np.ndarray:
        """``lam_nu+`` in lattice coordinates."""
        return (np.asarray(lam, dtype=float) @ self.gram @ self.plus.T) @ self.plus

    def minus_projection(self, lam) -> np.ndarray:
        return -(np.asarray(lam, dtype=float) @ self.gram @ self.minus.T) @ self.minus


def _orthonormalize(vectors: np.ndarray, form: np.ndarray) -> np.ndarray:
    """Gram--Schmidt with respect to a positive definite ``form``."""
    out = []
    for v in vectors:
        w = v.astype(float).copy()
        for u in out:
            w -= (u @ form @ w) * u
        nrm = w @ form @ w
        if nrm <= 1e-14:
            raise DegenerateFrame("vectors are not independent / not definite")
        out.append(w / math.sqrt(nrm))
    return np.array(out).reshape(len(out), form.shape[0])


def frame_from_plus_vectors(gram, vectors) -> IsometryFrame:
    """Frame whose ``nu+`` is spanned by ``vectors`` (a positive definite subspace)."""
    g = np.asarray(gram, dtype=float)
    v = np.atleast_2d(np.asarray(vectors, dtype=float))
    plus = _orthonormalize(v, g)
    n = g.shape[0]
    if plus.shape[0] == n:
        return IsometryFrame(g, plus, np.zeros((0, n)))
    # complement: vectors x with (x, e_i) = 0
    _, _, vt = np.linalg.svd(plus @ g)
    comp = vt[plus.shape[0]:]
    minus = _orthonormalize(comp, -g)
    frame = IsometryFrame(g, plus, minus)
    if frame.orthonormality_error() > 1e-10:
        raise DegenerateFrame("frame is not orthonormal")
    return frame


def standard_frame(L: GramLattice, perturbation=None) -> IsometryFrame:
    """Frame from the eigenvectors of the Gram matrix (optionally perturbed)."""
    g = np.asarray(L.gram, dtype=float)
    w, vecs = np.linalg.eigh(g)
    plus = vecs[:, w > 0].T
    if perturbation is not None:
        plus = plus + np.asarray(perturbation, dtype=float).reshape(plus.shape)
    return frame_from_plus_vectors(g, plus)


@dataclass
class ThetaShift:
    alpha: np.ndarray
    beta: np.ndarray

    @classmethod
    def zero(cls, n: int) -> "ThetaShift":
        return cls(np.zeros(n), np.zeros(n))


# ------------------------------------------------------------------ theta

def _poly_bound(p: HomoPoly, r: float) -> float:
    """Crude bound of ``|p(x)|`` on ``|x|^2 <= 2 r``."""
    rad = math.sqrt(max(2.0 * r, 1.0))
    return sum(abs(c) * rad ** sum(e) for e, c in p.terms.items())


def gaussian_tail(n: int, covolume: float, p_series: list, v: float, R: float) -> float:
    """Estimate of the part of a theta sum with majorant value above ``R``.

    Lattice points are counted by volume: the number with ``q_nu <= r`` is
    about ``(2 pi r)^(n/2) / (Gamma(n/2 + 1) covolume)``.
    """
    if R <= 0:
        return math.inf
    deg = max((q.degree() for q in p_series), default=0)
    coef = sum(sum(abs(c) for c in q.terms.values()) * v ** (-j) for j, q in enumerate(p_series))
    dens = (n / 2.0) * (2 * math.pi) ** (n / 2.0) / (math.gamma(n / 2.0 + 1) * covolume)
    a = n / 2.0 - 1 + deg / 2.0
    b = 2 * math.pi * v
    if b <= a / R:
        return math.inf
    # int_R^inf r^a e^{-b r} dr <= R^a e^{-b R} / (b - a / R)
    return dens * coef * 2 ** (deg / 2.0) * R ** a * math.exp(-b * R) / (b - a / R)


class ThetaSum:
    """Precomputed lattice points for a coset ``gamma + L`` and fixed frame.

    Points are ``lam + beta`` with majorant value at most ``R``; the
    polynomial is expanded as ``sum_j P_j v^(-j)`` so that evaluation at
    many ``tau`` is a matrix product.
    """

    def __init__(self, gram: np.ndarray, coset_rep, frame: IsometryFrame, p: HomoPoly, R: float,
                 shift: ThetaShift | None = None, heat_sign: int = -1):
        gram = np.asarray(gram, dtype=float)
        n = gram.shape[0]
        shift = shift if shift is not None else ThetaShift.zero(n)
        center = np.asarray([float(x) for x in coset_rep]) + np.asarray(shift.beta, dtype=float)
        pts = ellipsoid_points(frame.majorant_gram(), R, center=-center)
        lam = pts + np.asarray([float(x) for x in coset_rep])  # lam in gamma + L
        vec = lam + np.asarray(shift.beta, dtype=float)          # lam + beta
        coords = frame.coords(vec)
        bp = frame.b_plus
        self.q_plus = 0.5 * np.sum(coords[:, :bp] ** 2, axis=1)
        self.q_minus = -0.5 * np.sum(coords[:, bp:] ** 2, axis=1)
        half_beta = lam + 0.5 * np.asarray(shift.beta, dtype=float)
        self.phase = e_of(-(half_beta @ gram @ np.asarray(shift.alpha, dtype=float)))
        self.series = p.heat_series(heat_sign)
        self.poly_values = np.array([q(coords) for q in self.series]) if len(vec) else np.zeros((len(self.series), 0))
        self.n_points = len(vec)
        self.R = R
        self.rank = n
        self.covolume = math.sqrt(abs(np.linalg.det(gram)))

    def __call__(self, tau) -> np.ndarray:
        tau = np.atleast_1d(np.asarray(tau, dtype=complex))
        if self.n_points == 0:
            return np.zeros(len(tau), dtype=complex)
        u, v = tau.real, tau.imag
        powers = np.array([v ** (-j) for j in range(len(self.series))])  # (J, T)
        pv = powers.T @ self.poly_values                                  # (T, N)
        expo = np.exp(2j * np.pi * (u[:, None] * (self.q_plus + self.q_minus)[None, :])
                      - 2 * np.pi * v[:, None] * (self.q_plus - self.q_minus)[None, :])
        return np.sum(pv * expo * self.phase[None, :], axis=1)

    def abs_sum(self, tau) -> np.ndarray:
        """Sum of the absolute values of the terms (a scale for relative errors)."""
        tau = np.atleast_1d(np.asarray(tau, dtype=complex))
        if self.n_points == 0:
            return np.zeros(len(tau))
        v = tau.imag
        powers = np.array([v ** (-j) for j in range(len(self.series))])
        pv = powers.T @ self.poly_values
        return np.sum(np.abs(pv) * np.exp(-2 * np.pi * v[:, None] * (self.q_plus - self.q_minus)[None, :]), axis=1)

    def tail(self, v: float) -> float:
        return gaussian_tail(self.rank, self.covolume, self.series, v, self.R)


def theta_component(L: GramLattice, gamma, tau, frame: IsometryFrame, p: HomoPoly, R: float,
                    shift: ThetaShift | None = None, heat_sign: int = -1):
    """``theta_gamma(tau, alpha, beta, nu, p)`` truncated at majorant radius ``R``.

    Returns ``(values, tail_estimate)``.
    """
    D = discriminant_form(L)
    ts = ThetaSum(L.gram, D.lift(tuple(gamma)), frame, p, R, shift, heat_sign)
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=complex))
    return ts(tau_arr), max(ts.tail(float(t.imag)) for t in tau_arr)


def theta_full(L: GramLattice, tau, frame: IsometryFrame, p: HomoPoly, R: float,
               shift: ThetaShift | None = None, heat_sign: int = -1):
    """``Theta_L`` as an array of shape ``(len(tau), |L'/L|)`` plus a tail estimate."""
    D = discriminant_form(L)
    tau_arr = np.atleast_1d(np.asarray(tau, dtype=complex))
    cols, tail = [], 0.0
    for g in D.elements:
        vals, t = theta_component(L, g, tau_arr, frame, p, R, shift, heat_sign)
        cols.append(vals)
        tail = max(tail, t)
    return np.array(cols).T, tail


def transformation_residual(L: GramLattice, g: MetaplecticElement, tau, frame: IsometryFrame, p: HomoPoly,
                            R: float, shift: ThetaShift | None = None, heat_sign: int = -1) -> float:
    """Relative residual of the theta transformation law for ``g``.

    ``Theta(g tau, a alpha + b beta, c alpha + d beta) =
    phi^(b+ + 2 kappa) conj(phi)^(b-) rho(g) Theta(tau, alpha, beta)``.
    """
    n = L.rank
    shift = shift if shift is not None else ThetaShift.zero(n)
    al, be = np.asarray(shift.alpha, dtype=float), np.asarray(shift.beta, dtype=float)
    new_shift = ThetaShift(g.a * al + g.b * be, g.c * al + g.d * be)
    kappa = p.degree()
    lhs, _ = theta_full(L, g.act(tau), frame, p, R, new_shift, heat_sign)
    rhs, _ = theta_full(L, tau, frame, p, R, shift, heat_sign)
    D = discriminant_form(L)
    scale = max(float(ThetaSum(L.gram, D.lift(e), frame, p, R, shift, heat_sign).abs_sum(tau)[0])
                for e in D.elements)
    rep = WeilRepresentation(discriminant_form(L))
    phi = g.phi(tau)
    factor = phi ** (frame.b_plus + 2 * kappa) * np.conj(phi) ** frame.b_minus
    rhs = factor * (rep.evaluate(g) @ rhs[0])
    # relative to the size of the terms: odd p can make Theta vanish identically
    return float(np.abs(lhs[0] - rhs).max() / max(np.abs(rhs).max(), scale, 1e-300))


# ------------------------------------------------- K-expansion ingredients

@dataclass
class OmegaDecomposition:
    """The pieces of ``p(nu(lam)) = sum_h (lam, z_nu+)^h p_{omega,h}(omega(lam))``."""

    z_plus: np.ndarray          # z_nu+ in lattice coordinates
    z_minus: np.ndarray
    z_plus_sq: float            # (z_nu+, z_nu+)
    omega_plus: np.ndarray      # rows: orthonormal basis of omega+
    omega_minus: np.ndarray
    polys: dict                 # h -> HomoPoly in (b+ - 1) + (b- - 1) variables

    def omega_coords(self, lam: np.ndarray, gram: np.ndarray) -> np.ndarray:
        g = np.atleast_2d(lam) @ gram
        return np.hstack([g @ self.omega_plus.T, -(g @ self.omega_minus.T)])

    def reconstruct(self, lam: np.ndarray, gram: np.ndarray) -> np.ndarray:
        lam = np.atleast_2d(lam)
        t = lam @ gram @ self.z_plus
        w = self.omega_coords(lam, gram)
        return sum(t ** h * q(w) for h, q in self.polys.items())


def _complement_basis(frame_rows: np.ndarray, gram: np.ndarray, direction: np.ndarray, sign: float):
    """Orthonormal basis of ``direction^⊥`` inside the span of ``frame_rows``.

    Returns the coordinate matrix ``A`` (rows: unit direction first, then the
    complement) and the complement vectors in lattice coordinates.
    """
    a = sign * (frame_rows @ gram @ direction)
    nrm = np.linalg.norm(a)
    if nrm < 1e-12:
        raise DegenerateFrame("z has no component in this part of the frame")
    a = a / nrm
    m = len(a)
    q, _ = np.linalg.qr(np.column_stack([a, np.eye(m)]))
    q = q[:, :m]
    if q[:, 0] @ a < 0:
        q[:, 0] = -q[:, 0]
    comp_coords = q[:, 1:]
    comp_vectors = comp_coords.T @ frame_rows
    return q, comp_vectors


def p_omega_decompose(p: HomoPoly, frame: IsometryFrame, z) -> OmegaDecomposition:
    g = frame.gram
    z = np.asarray([float(x) for x in z])
    z_plus = frame.plus_projection(z)
    z_minus = frame.minus_projection(z)
    zp_sq = float(z_plus @ g @ z_plus)
    if zp_sq < 1e-24:
        raise DegenerateFrame("|z_nu+| is zero")
    qp, omega_plus = _complement_basis(frame.plus, g, z, 1.0)
    if frame.b_minus:
        _, omega_minus = _complement_basis(frame.minus, g, z, -1.0)
    else:
        omega_minus = np.zeros((0, g.shape[0]))
    bp = frame.b_plus
    # nu+ coordinates x = qp @ (t, w) with t = (lam, unit z_nu+)
    p_plus = HomoPoly(bp, {e[:bp]: c for e, c in p.terms.items()})
    if any(any(e[bp:]) for e in p.terms):
        raise ValueError("p must not depend on the negative definite variables")
    sub = p_plus.substitute(qp)
    nz = math.sqrt(zp_sq)
    nvars = (bp - 1) + omega_minus.shape[0]
    polys = {}
    for h, q in sub.split_first_variable().items():
        polys[h] = q.scale(nz ** (-h)).extend(nvars, list(range(bp - 1)))
    return OmegaDecomposition(z_plus, z_minus, zp_sq, omega_plus, omega_minus, polys)


def _frame_on_K(cusp: CuspComplement, dec: OmegaDecomposition) -> IsometryFrame:
    """The isometry ``omega`` restricted to ``K ⊗ R`` in the coordinates of K."""
    B = np.array([[float(x) for x in row] for row in cusp.K_basis])
    gL = np.asarray(cusp.L.gram, dtype=float)
    gK = np.asarray(cusp.K.gram, dtype=float)
    gK_inv = np.linalg.inv(gK)
    # the functional k -> (B^T k, f)_L is represented in K by G_K^{-1} B G_L f
    plus = (gK_inv @ B @ gL @ dec.omega_plus.T).T
    minus = (gK_inv @ B @ gL @ dec.omega_minus.T).T
    frame = IsometryFrame(gK, plus, minus)
    if frame.orthonormality_error() > 1e-9:
        raise DegenerateFrame("omega does not restrict to an isometry on K")
    return frame


def k_expansion_rhs(L: GramLattice, gamma, tau: complex, frame: IsometryFrame, p: HomoPoly,
                    cusp: CuspComplement, cd_bound: int = 6, R: float = 8.0) -> complex:
    """Right-hand side of the expansion of ``theta_gamma`` as a Poincare series over ``(c, d)``.

    ``(2 v z+^2)^(-1/2) sum_{c = (gamma, z) mod N} sum_d sum_h (-2 i v)^(-h) (c conj(tau) + d)^h
    e(-|c tau + d|^2 / (4 i v z+^2) - (gamma, z') d + q(z') c d)
    theta^K_{pi(gamma - c z')}(tau, d mu_K, -c mu_K, omega, p_{omega,h})``.
    """
    D = discriminant_form(L)
    gl = np.asarray(L.gram, dtype=float)
    dec = p_omega_decompose(p, frame, cusp.z)
    zp2 = dec.z_plus_sq
    zp = np.array([float(x) for x in cusp.z_prime])
    mu = -zp + dec.z_plus / (2 * zp2) + dec.z_minus / (2 * float(dec.z_minus @ gl @ dec.z_minus))
    # mu_K in K coordinates
    B = np.array([[float(x) for x in row] for row in cusp.K_basis])
    gK = np.asarray(cusp.K.gram, dtype=float)
    mu_K = np.linalg.solve(gK, B @ gl @ mu)
    kframe = _frame_on_K(cusp, dec)
    lift = D.lift(tuple(gamma))
    gz = L.bilinear(lift, cusp.z)
    gzp = L.bilinear(lift, cusp.z_prime)
    qzp = L.q(cusp.z_prime)
    N = cusp.level
    zeta_K = cusp.zeta_K
    v = tau.imag
    total = 0j
    for c in range(-cd_bound, cd_bound + 1):
        if (c - gz) % N:
            continue
        lam = [x - c * y for x, y in zip(lift, cusp.z_prime)]
        a = L.bilinear(lam, cusp.z)
        rep = [x + (a / N) * y for x, y in zip(k_projection(lam, cusp), zeta_K)]
        for d in range(-cd_bound, cd_bound + 1):
            w = c * tau + d
            pref = math.exp(-math.pi * abs(w) ** 2 / (2 * v * zp2))
            if pref < 1e-18:
                continue
            phase = e_of(float(-gzp * d + qzp * c * d))
            shift = ThetaShift(d * mu_K, -c * mu_K)
            for h, ph in dec.polys.items():
                ts = ThetaSum(gK, rep, kframe, ph, R, shift)
                total += ((-2j * v) ** (-h) * np.conj(w) ** h * pref * phase * ts(tau)[0])
    return complex(total / math.sqrt(2 * v * zp2))
