"""The tube domain of signature (2, l) and orthogonal Eisenstein series.

A cusp ``z`` (with ``z'``) of ``L`` fixes ``K = L ∩ z^⊥ ∩ z'^⊥``.  Points
``Z = X + iY`` of the tube domain have ``X, Y`` in ``K ⊗ R`` (coordinates
in the basis of K) with ``q(Y) > 0`` and ``(Y, d) > 0`` for a primitive
isotropic ``d`` of K.  They embed as the isotropic vectors

    Z_L = Z - q(Z) z + z~,   z~ = z' - q(z') z,

of ``V(C)``.  The length ``|Y|`` is ``sqrt((Y, Y)) = sqrt(2 q(Y))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from .eisenstein import MIN_CONVERGENCE_MARGIN, ConvergenceMarginViolated
from .lattice import (CuspComplement, GramLattice, IsotropicVectorRecord, LatticeError, NotFoundWithinBound,
                      _candidates, discriminant_form, find_level_one_isotropic, ext_gcd_combination, mat_vec, isotropic_classes, isotropic_points, level_of,
                      pi_class_map, split_hyperbolic)
from .theta import IsometryFrame, frame_from_plus_vectors


class NoCuspInK(LatticeError):
    pass


class OrbitIdentificationUnavailable(LatticeError):
    pass


class ZeroDenominator(ArithmeticError):
    pass


class NotInDomain(ValueError):
    pass


def _find_isotropic(K: GramLattice, search_bound: int = 3):
    for m in range(1, search_bound + 1):
        for v in _candidates(K.rank, m):
            if math.gcd(*map(abs, v)) == 1 and K.q(v) == 0:
                return v
    return None


def _dual_partner(K: GramLattice, d) -> tuple:
    """A vector ``d'`` of ``K'`` with ``(d, d') = 1``."""
    gd = [int(x) for x in mat_vec(K.gram, [Fraction(x) for x in d])]
    if level_of(d, K) == 1:
        _, coeffs = ext_gcd_combination(gd)
        return tuple(Fraction(c) for c in coeffs)
    _, coeffs = ext_gcd_combination([int(x) for x in d])
    return tuple(mat_vec(K.gram_inverse, coeffs))


class OrthogonalDomain:
    """Tube-domain model attached to a cusp of an even lattice of signature (2, l).

    If ``K`` has no isotropic vector within the search bound the component
    is fixed by a positive norm vector of K instead, and ``cusp_in_K`` is
    False (``strict=True`` raises :class:`NoCuspInK` in that case).
    """

    def __init__(self, L: GramLattice, cusp: CuspComplement | None = None, strict: bool = False):
        if L.b_plus != 2:
            raise LatticeError("the tube domain needs signature (2, l)")
        self.L = L
        self.cusp = cusp if cusp is not None else split_hyperbolic(L)
        K = self.cusp.K
        self.K = K
        self.gram = L.gram_array
        self.gram_K = K.gram_array
        self.K_basis = np.array([[float(x) for x in row] for row in self.cusp.K_basis])
        self.z = np.array([float(x) for x in self.cusp.z])
        self.z_prime = np.array([float(x) for x in self.cusp.z_prime])
        self.z_tilde = np.array([float(x) for x in self.cusp.z_tilde])
        d = _find_isotropic(K)
        if d is not None:
            dp = _dual_partner(K, d)
            self.d = np.array([float(x) for x in d])
            self.d_prime = np.array([float(x) for x in dp])
            self.d_tilde = self.d_prime - float(K.q(dp)) * self.d
            self.cusp_in_K = True
            self.orientation = self.d
        else:
            if strict:
                raise NoCuspInK("K has no primitive isotropic vector")
            self.d = self.d_prime = self.d_tilde = None
            self.cusp_in_K = False
            w, vecs = np.linalg.eigh(self.gram_K)
            self.orientation = self.gram_K @ vecs[:, int(np.argmax(w))]
            # (Y, orientation) > 0 picks one cone; use the dual direction
            self.orientation = np.linalg.solve(self.gram_K, self.orientation)

    @property
    def dim(self) -> int:
        return self.K.rank

    def qK(self, x):
        x = np.asarray(x)
        return 0.5 * (x @ self.gram_K @ x)

    def bilK(self, x, y):
        return np.asarray(x) @ self.gram_K @ np.asarray(y)

    def embed(self, x) -> np.ndarray:
        """K coordinates to lattice coordinates."""
        return np.asarray(x) @ self.K_basis

    @cached_property
    def _K_pinv(self) -> np.ndarray:
        return np.linalg.pinv(self.K_basis)

    def project_K(self, w) -> np.ndarray:
        """K coordinates of the orthogonal projection of ``w`` to ``K ⊗ C``."""
        w = np.asarray(w)
        g = self.gram
        a = w @ g @ self.z
        b = w @ g @ self.z_prime
        zz = self.z_prime @ g @ self.z_prime
        wk = w - a * self.z_prime + a * zz * self.z - b * self.z
        return wk @ self._K_pinv

    def point(self, X, Y) -> "TubePoint":
        return TubePoint(self, np.asarray(X, dtype=float), np.asarray(Y, dtype=float))

    def in_domain(self, Y) -> bool:
        Y = np.asarray(Y, dtype=float)
        return bool(self.qK(Y) > 0 and self.bilK(Y, self.orientation) > 0)


@dataclass
class TubePoint:
    domain: OrthogonalDomain
    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        dom = self.domain
        if not dom.in_domain(self.Y):
            raise NotInDomain("need q(Y) > 0 and Y in the chosen cone")
        zl = self.Z_L
        g = dom.gram
        scale = float(np.abs(zl).max()) ** 2 * float(np.abs(g).max())
        if abs(zl @ g @ zl) > 1e-10 * scale or (zl @ g @ zl.conj()).real <= 0:
            raise NotInDomain("Z_L is not in the isotropic cone")

    @property
    def Z(self) -> np.ndarray:
        return self.X + 1j * self.Y

    @cached_property
    def q_Y(self) -> float:
        return float(self.domain.qK(self.Y))

    @property
    def norm_Y(self) -> float:
        """``|Y| = sqrt(2 q(Y))``."""
        return math.sqrt(2.0 * self.q_Y)

    @cached_property
    def Z_L(self) -> np.ndarray:
        dom = self.domain
        Zc = self.Z
        qZ = 0.5 * (Zc @ dom.gram_K @ Zc)
        return dom.embed(Zc) - qZ * dom.z + dom.z_tilde


def make_domain(L: GramLattice, cusp: CuspComplement | None = None, strict: bool = False) -> OrthogonalDomain:
    return OrthogonalDomain(L, cusp, strict)


def lift_Z(Z: TubePoint) -> np.ndarray:
    return Z.Z_L


# ------------------------------------------------------------ isometries

def _orientation_sign(matrix: np.ndarray, gram: np.ndarray) -> float:
    """Sign of ``det((sigma e_i, e_j))`` for an orthonormal basis of a positive 2-plane."""
    w, vecs = np.linalg.eigh(gram)
    plus = frame_from_plus_vectors(gram, vecs[:, w > 0].T).plus
    img = plus @ matrix.T
    return float(np.sign(np.linalg.det(img @ gram @ plus.T)))


@dataclass(frozen=True)
class OrthTransform:
    """An isometry ``x -> A x`` of the lattice (column coordinates)."""

    matrix: tuple
    plus_oriented: bool

    @property
    def array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.matrix])

    def __matmul__(self, other: "OrthTransform") -> "OrthTransform":
        a = np.array(self.matrix, dtype=object)
        b = np.array(other.matrix, dtype=object)
        prod = a.dot(b)
        return OrthTransform(tuple(tuple(int(x) for x in row) for row in prod),
                             self.plus_oriented == other.plus_oriented)


def orth_transform(L: GramLattice, matrix) -> OrthTransform:
    """Validate ``A^T G A = G`` exactly and decide the orientation character."""
    A = [[Fraction(x) for x in row] for row in matrix]
    n = L.rank
    G = L.gram
    for i in range(n):
        for j in range(n):
            val = sum(A[r][i] * G[r][c] * A[c][j] for r in range(n) for c in range(n))
            if val != G[i][j]:
                raise LatticeError("matrix does not preserve the Gram matrix")
    arr = np.array([[float(x) for x in row] for row in A])
    sign = _orientation_sign(arr, L.gram_array)
    return OrthTransform(tuple(tuple(int(x) if x.denominator == 1 else x for x in row) for row in A), sign > 0)


def eichler_transform(L: GramLattice, e, x) -> OrthTransform:
    """``v -> v - (v, e) x + (v, x) e - q(x) (v, e) e`` for isotropic ``e`` and ``x ⊥ e``."""
    e = [Fraction(t) for t in e]
    x = [Fraction(t) for t in x]
    if L.q(e) != 0 or L.bilinear(e, x) != 0:
        raise LatticeError("need isotropic e and x orthogonal to e")
    n = L.rank
    qx = L.q(x)
    cols = []
    for i in range(n):
        v = [Fraction(int(i == j)) for j in range(n)]
        ve, vx = L.bilinear(v, e), L.bilinear(v, x)
        cols.append([v[j] - ve * x[j] + vx * e[j] - qx * ve * e[j] for j in range(n)])
    mat = [[cols[j][i] for j in range(n)] for i in range(n)]
    return orth_transform(L, mat)


def j_factor(sigma: OrthTransform, Z: TubePoint) -> complex:
    """``j(sigma, Z) = (sigma(Z_L), z)``."""
    dom = Z.domain
    val = complex((sigma.array @ Z.Z_L) @ dom.gram @ dom.z)
    if abs(val) < 1e-300:
        raise ZeroDenominator("j(sigma, Z) vanishes")
    return val


def act(sigma: OrthTransform, Z: TubePoint) -> TubePoint:
    """The point ``sigma Z`` with ``(sigma Z)_L = sigma(Z_L) / j(sigma, Z)``."""
    if not sigma.plus_oriented:
        raise NotInDomain("sigma does not preserve the component")
    dom = Z.domain
    w = (sigma.array @ Z.Z_L) / j_factor(sigma, Z)
    W = dom.project_K(w)
    return dom.point(W.real, W.imag)


def majorant_frame(Z: TubePoint) -> IsometryFrame:
    """Frame with ``nu+`` spanned by ``X_L/|Y|, Y_L/|Y|`` (in that order)."""
    zl = Z.Z_L
    return frame_from_plus_vectors(Z.domain.gram, np.array([zl.real, zl.imag]) / Z.norm_Y)


def majorant_gram(Z: TubePoint) -> np.ndarray:
    """Gram matrix ``M`` of ``q_{Z_L}`` in lattice coordinates: ``q_Z(lam) = lam^T M lam / 2``.

    Uses ``q_Z(lam) = |(lam, Z_L)|^2 / (2 q(Y)) - q(lam)``.
    """
    g = Z.domain.gram
    w = g @ Z.Z_L
    return (np.outer(w, w.conj()).real / Z.q_Y) - g


# ------------------------------------------------------------ cusp classes

@dataclass(frozen=True)
class CuspClass:
    delta: tuple
    representative: IsotropicVectorRecord
    N_delta: int


def check_two_hyperbolic(L: GramLattice, search_bound: int = 2) -> tuple:
    """Find ``L = U ⊕ U ⊕ M``: a level-1 cusp of L and a level-1 isotropic vector of its K."""
    try:
        outer = split_hyperbolic(L, search_bound)
        inner = find_level_one_isotropic(outer.K, search_bound)
    except NotFoundWithinBound as exc:
        raise OrbitIdentificationUnavailable(f"no splitting of two hyperbolic planes found: {exc}") from None
    return outer, inner


def cusp_classes(L: GramLattice, search_bound: int = 2) -> list:
    """One class per isotropic element of ``L'/L`` with a representative cusp."""
    outer, _ = check_two_hyperbolic(L, search_bound)
    D = discriminant_form(L)
    cusp = outer
    z = [Fraction(x) for x in cusp.z]
    e2 = list(cusp.z_tilde)
    out = []
    for delta in isotropic_classes(D):
        N = D.element_order(delta)
        lam = D.lift(delta)
        lam_K = cusp.project(lam)  # same class: L = <z, z~> ⊕ K with z, z~ in L
        if D.reduce(lam_K) != tuple(delta):
            raise AssertionError("projection changed the class")
        qlam = cusp.L.q(lam_K)
        vec = [N * (a - qlam * b + c) for a, b, c in zip(z, e2, lam_K)]
        if any(x.denominator != 1 for x in vec):
            raise AssertionError("representative is not integral")
        vec = tuple(int(x) for x in vec)
        g = math.gcd(*map(abs, vec))
        vec = tuple(x // g for x in vec)
        cls = pi_class_map(vec, L)
        if cls != tuple(delta):
            raise AssertionError("representative has the wrong class")
        rec = IsotropicVectorRecord(tuple(Fraction(x) for x in vec), True, 1, True, level_of(vec, L), cls)
        out.append(CuspClass(tuple(delta), rec, N))
    return out


# ------------------------------------------------------------ orbit sums

@dataclass
class OrbitSum:
    value: complex
    tail_estimate: float
    n_terms: int
    height_bound: float


def primitive_isotropic_lattice_vectors(L: GramLattice, majorant: np.ndarray, bound: float):
    """Primitive isotropic ``mu`` in L with ``mu^T M mu / 2 <= bound`` and their classes ``pi_L(mu)``."""
    pts = isotropic_points(L.gram_array, majorant, bound)
    if len(pts) == 0:
        return pts, [], np.zeros(0, dtype=np.int64)
    g = np.gcd.reduce(np.abs(pts), axis=1)
    pts = pts[g == 1]
    gm = pts @ L.gram_array.astype(np.int64)
    levels = np.gcd.reduce(np.abs(gm), axis=1)
    D = discriminant_form(L)
    classes = D.reduce_many(pts, levels)
    return pts, classes, levels


def _orbit_tail(n_terms: int, rank: int, exponent: float, bound: float) -> float:
    """Estimate of ``sum h^(-exponent)`` over vectors with majorant value ``h > bound``.

    About ``C h^a`` isotropic vectors have majorant value below ``h``
    (``a = (rank - 2) / 2``); ``C`` is fitted from the count at ``bound``.
    """
    a = (rank - 2) / 2.0
    if exponent <= a:
        return math.inf
    C = n_terms / bound ** a if bound > 0 else 0.0
    return C * a / (exponent - a) * bound ** (a - exponent)


def isotropic_terms(Z: TubePoint, kappa: int, s, bound: float):
    """Primitive isotropic ``mu`` of L with the values ``(mu, Z_L)^(-kappa) (q(Y)/|(mu, Z_L)|^2)^s``."""
    dom = Z.domain
    M = majorant_gram(Z)
    pts, classes, levels = primitive_isotropic_lattice_vectors(dom.L, M, bound)
    pair = pts @ (dom.gram @ Z.Z_L)
    s = complex(s)
    terms = pair ** (-kappa) * np.exp(s * np.log(Z.q_Y / np.abs(pair) ** 2))
    return pts, classes, levels, terms


def _check_margin(kappa: int, s) -> None:
    if (2 * complex(s) + kappa).real < MIN_CONVERGENCE_MARGIN:
        raise ConvergenceMarginViolated(f"Re(2s + kappa) = {(2 * complex(s) + kappa).real} is too small")


def eisenstein_direct(kappa: int, cls, Z: TubePoint, s, height_bound: float = 200.0) -> OrbitSum:
    """Orbit sum ``G_{kappa, delta}(Z, s)`` over primitive isotropic ``mu`` in L with ``pi_L(mu) = delta``.

    Both ``mu`` and ``-mu`` are summed.  ``cls`` is a :class:`CuspClass` or
    a discriminant element.  The truncation is ``q_{Z_L}(mu) <= height_bound``.
    """
    _check_margin(kappa, s)
    dom = Z.domain
    check_two_hyperbolic(dom.L)
    delta = tuple(cls.delta if isinstance(cls, CuspClass) else cls)
    pts, classes, levels, terms = isotropic_terms(Z, kappa, s, height_bound)
    mask = np.array([c == delta for c in classes], dtype=bool)
    value = complex(np.sum(terms[mask])) if mask.any() else 0j
    # |term| = c h^(-e) at majorant value h, since |(mu, Z_L)|^2 = 2 q(Y) h
    sigma = complex(s).real
    c = (2.0 * Z.q_Y) ** (-kappa / 2.0) * 2.0 ** (-sigma)
    tail = c * _orbit_tail(int(mask.sum()), dom.L.rank, kappa / 2.0 + sigma, height_bound)
    return OrbitSum(value, tail, int(mask.sum()), height_bound)
