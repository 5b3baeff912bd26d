"""Exact arithmetic for even lattices.

Lattices are given by integer Gram matrices.  Vectors are coordinate
tuples in the lattice basis; dual vectors carry ``Fraction`` entries.
The discriminant form ``L'/L`` is built from the Smith normal form of
the Gram matrix and its elements are canonical residue tuples.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce

import numpy as np


class LatticeError(ValueError):
    pass


class OddDiagonal(LatticeError):
    pass


class Singular(LatticeError):
    pass


class NotSymmetric(LatticeError):
    pass


class ZeroVector(LatticeError):
    pass


class NotInDualLattice(LatticeError):
    pass


class BoundTooLargeForBoxSearch(RuntimeError):
    pass


class NotFoundWithinBound(LookupError):
    """No suitable vector inside the search box; says nothing about existence."""


# ----------------------------------------------------- exact linear algebra

def _frac_matrix(rows):
    return [[Fraction(x) for x in row] for row in rows]


def frac_inverse(a):
    """Inverse of a square rational matrix by Gauss--Jordan elimination."""
    n = len(a)
    m = [list(map(Fraction, row)) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            raise Singular("matrix is singular")
        m[col], m[piv] = m[piv], m[col]
        p = m[col][col]
        m[col] = [x / p for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                f = m[r][col]
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return [row[n:] for row in m]


def frac_det(a) -> Fraction:
    n = len(a)
    m = _frac_matrix(a)
    det = Fraction(1)
    for col in range(n):
        piv = next((r for r in range(col, n) if m[r][col] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != col:
            m[col], m[piv] = m[piv], m[col]
            det = -det
        p = m[col][col]
        det *= p
        for r in range(col + 1, n):
            if m[r][col] != 0:
                f = m[r][col] / p
                m[r] = [x - f * y for x, y in zip(m[r], m[col])]
    return det


def mat_vec(a, v):
    return tuple(sum((x * y for x, y in zip(row, v)), Fraction(0)) for row in a)


def mat_mul(a, b):
    bt = list(zip(*b))
    return [[sum((x * y for x, y in zip(row, col)), 0) for col in bt] for row in a]


def smith_normal_form(a):
    """Smith normal form of an integer matrix.

    Returns ``(U, D, V)`` with ``U`` and ``V`` unimodular and ``U a V = D``
    diagonal with ``D[i][i]`` dividing ``D[i+1][i+1]`` (entries >= 0).
    """
    m, n = len(a), len(a[0])
    d = [list(map(int, row)) for row in a]
    u = [[int(i == j) for j in range(m)] for i in range(m)]
    v = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        d[i], d[j] = d[j], d[i]
        u[i], u[j] = u[j], u[i]

    def swap_cols(i, j):
        for row in d:
            row[i], row[j] = row[j], row[i]
        for row in v:
            row[i], row[j] = row[j], row[i]

    def add_row(src, dst, f):  # row_dst += f * row_src
        d[dst] = [x + f * y for x, y in zip(d[dst], d[src])]
        u[dst] = [x + f * y for x, y in zip(u[dst], u[src])]

    def add_col(src, dst, f):  # col_dst += f * col_src
        for row in d:
            row[dst] += f * row[src]
        for row in v:
            row[dst] += f * row[src]

    for t in range(min(m, n)):
        while True:
            nz = [(abs(d[i][j]), i, j) for i in range(t, m) for j in range(t, n) if d[i][j] != 0]
            if not nz:
                return u, d, v
            _, pi, pj = min(nz)
            swap_rows(t, pi)
            swap_cols(t, pj)
            p = d[t][t]
            done = True
            for i in range(t + 1, m):
                q = d[i][t] // p
                if q:
                    add_row(t, i, -q)
                if d[i][t] != 0:
                    done = False
            for j in range(t + 1, n):
                q = d[t][j] // p
                if q:
                    add_col(t, j, -q)
                if d[t][j] != 0:
                    done = False
            if not done:
                continue
            # divisibility condition for the rest of the block
            bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n) if d[i][j] % p), None)
            if bad is None:
                break
            add_row(bad[0], t, 1)
        if d[t][t] < 0:
            d[t] = [-x for x in d[t]]
            u[t] = [-x for x in u[t]]
    return u, d, v


def integer_kernel(a):
    """Basis (as rows) of the integer kernel of an integer matrix."""
    n = len(a[0])
    _, d, v = smith_normal_form(a)
    rank = sum(1 for i in range(min(len(d), n)) if d[i][i] != 0)
    return hermite_rows([[v[i][j] for i in range(n)] for j in range(rank, n)])


def hermite_rows(rows):
    """Row Hermite normal form of an integer matrix of full row rank."""
    h = [list(map(int, r)) for r in rows]
    if not h:
        return h
    m, n = len(h), len(h[0])
    r = 0
    for c in range(n):
        if r == m:
            break
        while True:
            nz = [(abs(h[i][c]), i) for i in range(r, m) if h[i][c] != 0]
            if not nz:
                break
            _, piv = min(nz)
            h[r], h[piv] = h[piv], h[r]
            others = [i for i in range(r + 1, m) if h[i][c] != 0]
            if not others:
                break
            for i in others:
                q = h[i][c] // h[r][c]
                h[i] = [x - q * y for x, y in zip(h[i], h[r])]
        if r < m and h[r][c] != 0:
            if h[r][c] < 0:
                h[r] = [-x for x in h[r]]
            for i in range(r):
                q = h[i][c] // h[r][c]
                h[i] = [x - q * y for x, y in zip(h[i], h[r])]
            r += 1
    return h


def ext_gcd_combination(values):
    """Integers ``x`` with ``sum(x_i * values_i) = gcd(values)``."""
    g, coeffs = 0, [0] * len(values)
    for i, a in enumerate(values):
        # invariant: g = sum coeffs_j values_j over j < i
        if a == 0:
            continue
        old_g = g
        # extended Euclid on (old_g, a)
        r0, r1, s0, s1, t0, t1 = old_g, a, 1, 0, 0, 1
        while r1 != 0:
            q = r0 // r1
            r0, r1 = r1, r0 - q * r1
            s0, s1 = s1, s0 - q * s1
            t0, t1 = t1, t0 - q * t1
        if r0 < 0:
            r0, s0, t0 = -r0, -s0, -t0
        coeffs = [c * s0 for c in coeffs]
        coeffs[i] = t0
        g = r0
    return g, coeffs


# ---------------------------------------------------------------- lattice

def _inertia(gram) -> tuple:
    """(number of positive, number of negative) pivots of a symmetric matrix."""
    m = _frac_matrix(gram)
    n = len(m)
    pos = neg = 0
    active = list(range(n))
    while active:
        i = active[0]
        if m[i][i] == 0:
            j = next((j for j in active[1:] if m[j][j] != 0), None)
            if j is not None:
                active.remove(j)
                active.insert(0, j)
                continue
            j = next((j for j in active[1:] if m[i][j] != 0), None)
            if j is None:
                raise Singular("gram matrix is singular")
            # congruence x_i <- x_i + x_j makes the pivot 2 m_ij + m_jj != 0
            for k in range(n):
                m[i][k] += m[j][k]
            for k in range(n):
                m[k][i] += m[k][j]
            continue
        p = m[i][i]
        if p > 0:
            pos += 1
        else:
            neg += 1
        rest = active[1:]
        for r in rest:
            f = m[r][i] / p
            if f:
                for c in rest:
                    m[r][c] -= f * m[i][c]
        active = rest
    return pos, neg


@dataclass(frozen=True)
class GramLattice:
    """An even non-degenerate lattice given by its Gram matrix."""

    gram: tuple
    name: str = ""
    signature: tuple = field(init=False)

    def __post_init__(self):
        g = tuple(tuple(int(x) for x in row) for row in self.gram)
        n = len(g)
        if n == 0 or any(len(row) != n for row in g):
            raise LatticeError("gram must be a non-empty square matrix")
        if any(g[i][j] != g[j][i] for i in range(n) for j in range(n)):
            raise NotSymmetric("gram is not symmetric")
        if any(g[i][i] % 2 for i in range(n)):
            raise OddDiagonal("gram has an odd diagonal entry")
        if frac_det(g) == 0:
            raise Singular("gram is singular")
        object.__setattr__(self, "gram", g)
        object.__setattr__(self, "signature", _inertia(g))

    @property
    def rank(self) -> int:
        return len(self.gram)

    @property
    def b_plus(self) -> int:
        return self.signature[0]

    @property
    def b_minus(self) -> int:
        return self.signature[1]

    @cached_property
    def det(self) -> int:
        return int(frac_det(self.gram))

    @cached_property
    def gram_array(self) -> np.ndarray:
        return np.array(self.gram, dtype=np.int64)

    @cached_property
    def gram_inverse(self):
        return frac_inverse(self.gram)

    @cached_property
    def gram_inverse_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.gram_inverse])

    def bilinear(self, x, y):
        """Exact ``(x, y) = x^T G y``."""
        return sum((Fraction(x[i]) * self.gram[i][j] * Fraction(y[j])
                    for i in range(self.rank) for j in range(self.rank) if self.gram[i][j]), Fraction(0))

    def q(self, x):
        return self.bilinear(x, x) / 2

    def in_dual(self, x) -> bool:
        return all(v.denominator == 1 for v in mat_vec(self.gram, [Fraction(t) for t in x]))

    def discriminant_form(self) -> "DiscriminantForm":
        return discriminant_form(self)


def build_lattice(gram, name: str = "") -> GramLattice:
    return GramLattice(tuple(tuple(row) for row in gram), name)


def block_gram(name: str):
    """Gram matrix of a named block: ``U``, ``U(n)``, ``A1``, ``A1(-1)``, ``A1(n)``."""
    name = name.replace(" ", "")
    if name == "U":
        return [[0, 1], [1, 0]]
    if name.startswith("U(") and name.endswith(")"):
        n = int(name[2:-1])
        return [[0, n], [n, 0]]
    if name == "A1":
        return [[2]]
    if name.startswith("A1(") and name.endswith(")"):
        n = int(name[3:-1])
        return [[2 * n]]
    raise LatticeError(f"unknown block {name!r}")


def direct_sum(blocks, name: str = "") -> GramLattice:
    """Orthogonal direct sum of named blocks or explicit Gram matrices."""
    grams = [block_gram(b) if isinstance(b, str) else [list(r) for r in b] for b in blocks]
    n = sum(len(g) for g in grams)
    out = [[0] * n for _ in range(n)]
    off = 0
    for g in grams:
        for i, row in enumerate(g):
            for j, x in enumerate(row):
                out[off + i][off + j] = int(x)
        off += len(g)
    if not name:
        name = "+".join(b if isinstance(b, str) else "G" for b in blocks)
    return build_lattice(out, name)


# ------------------------------------------------------ discriminant form

class DiscriminantForm:
    """The finite quadratic module ``L'/L``.

    Elements are tuples of residues modulo ``orders`` (the non-trivial
    elementary divisors of the Gram matrix); ``lift`` returns a
    representative in ``L'`` as rational coordinates in the basis of ``L``.
    """

    def __init__(self, lattice: GramLattice):
        self.lattice = lattice
        u, d, v = smith_normal_form(lattice.gram)
        n = lattice.rank
        keep = [i for i in range(n) if abs(d[i][i]) != 1]
        self.orders = tuple(abs(d[i][i]) for i in keep)
        # generator i is V e_i / d_i
        self.generators = tuple(tuple(Fraction(v[r][i], abs(d[i][i])) for r in range(n)) for i in keep)
        v_inv = frac_inverse(v)
        self._coef_rows = [[abs(d[i][i]) * x for x in v_inv[i]] for i in keep]
        self.elements = tuple(itertools.product(*[range(o) for o in self.orders]))
        self.index = {e: i for i, e in enumerate(self.elements)}
        self.zero = tuple(0 for _ in self.orders)

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def order(self) -> int:
        return len(self.elements)

    def reduce(self, x) -> tuple:
        """Class of a dual vector ``x`` (rational coordinates in the basis of L)."""
        x = [Fraction(t) for t in x]
        out = []
        for row, o in zip(self._coef_rows, self.orders):
            c = sum((a * b for a, b in zip(row, x)), Fraction(0))
            if c.denominator != 1:
                raise NotInDualLattice(f"{x} is not in the dual lattice")
            out.append(int(c) % o)
        return tuple(out)

    def reduce_many(self, vectors: np.ndarray, denominators) -> list:
        """Classes of the rows ``vectors[i] / denominators[i]`` (integer rows)."""
        vecs = np.asarray(vectors, dtype=np.int64)
        dens = np.broadcast_to(np.asarray(denominators, dtype=np.int64), (len(vecs),))
        if not self.orders:
            return [self.zero] * len(vecs)
        rows = np.array([[int(x) for x in r] for r in self._coef_rows], dtype=np.int64)
        c = vecs @ rows.T
        if np.any(c % dens[:, None]):
            raise NotInDualLattice("some vector is not in the dual lattice")
        c = (c // dens[:, None]) % np.array(self.orders, dtype=np.int64)
        return [tuple(int(x) for x in row) for row in c]

    def lift(self, e) -> tuple:
        n = self.lattice.rank
        return tuple(sum((c * g[r] for c, g in zip(e, self.generators)), Fraction(0)) for r in range(n))

    def add(self, a, b) -> tuple:
        return tuple((x + y) % o for x, y, o in zip(a, b, self.orders))

    def neg(self, a) -> tuple:
        return tuple((-x) % o for x, o in zip(a, self.orders))

    def scale(self, m: int, a) -> tuple:
        return tuple((m * x) % o for x, o in zip(a, self.orders))

    def q(self, a) -> Fraction:
        return self.lattice.q(self.lift(a)) % 1

    def bilinear(self, a, b) -> Fraction:
        return self.lattice.bilinear(self.lift(a), self.lift(b)) % 1

    def element_order(self, a) -> int:
        return reduce(math.lcm, (o // math.gcd(o, x) for x, o in zip(a, self.orders)), 1)

    @cached_property
    def q_values(self) -> dict:
        return {e: self.q(e) for e in self.elements}

    @cached_property
    def bilinear_table(self) -> np.ndarray:
        """Matrix of ``(gamma, delta) mod 1`` as floats, in element order."""
        lifts = [self.lift(e) for e in self.elements]
        n = len(lifts)
        t = np.zeros((n, n))
        for i in range(n):
            for j in range(i, n):
                t[i, j] = t[j, i] = float(self.lattice.bilinear(lifts[i], lifts[j]) % 1)
        return t

    @cached_property
    def neg_permutation(self) -> np.ndarray:
        return np.array([self.index[self.neg(e)] for e in self.elements])


def discriminant_form(L: GramLattice) -> DiscriminantForm:
    return DiscriminantForm(L)


def isotropic_classes(D: DiscriminantForm) -> list:
    return [e for e in D.elements if D.q(e) == 0]


# ---------------------------------------------------- ellipsoid enumeration

MAX_ENUMERATION_ROWS = 20_000_000


def _ldl_reverse(m: np.ndarray):
    """Decompose ``x^T m x = sum_i d_i (x_i + sum_{j>i} mu_ij x_j)^2``."""
    n = m.shape[0]
    a = m.astype(float).copy()
    d = np.zeros(n)
    mu = np.zeros((n, n))
    for i in range(n):
        d[i] = a[i, i]
        if d[i] <= 0:
            raise LatticeError("majorant is not positive definite")
        mu[i, i + 1:] = a[i, i + 1:] / d[i]
        a[i + 1:, i + 1:] -= np.outer(a[i + 1:, i], a[i, i + 1:]) / d[i]
    return d, mu


def ellipsoid_points(majorant: np.ndarray, bound: float, center=None, stop_level: int = 0):
    """Integer vectors ``x`` with ``(x - c)^T M (x - c) / 2 <= bound``.

    Fincke--Pohst enumeration, vectorised over partial vectors.  With
    ``stop_level = 1`` the first coordinate is left free and the function
    returns the partial vectors together with the centre and half-width of
    the admissible interval for that coordinate.
    """
    m = np.asarray(majorant, dtype=float)
    n = m.shape[0]
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    d, mu = _ldl_reverse(m)
    budget = 2.0 * bound * (1 + 1e-12) + 1e-12
    xs = np.zeros((1, n), dtype=np.int64)
    rem = np.array([budget])
    for i in range(n - 1, stop_level - 1, -1):
        y = xs[:, i + 1:] - c[i + 1:]
        mid = c[i] - y @ mu[i, i + 1:]
        half = np.sqrt(np.maximum(rem, 0.0) / d[i])
        lo = np.ceil(mid - half).astype(np.int64)
        hi = np.floor(mid + half).astype(np.int64)
        counts = np.maximum(hi - lo + 1, 0)
        total = int(counts.sum())
        if total > MAX_ENUMERATION_ROWS:
            raise BoundTooLargeForBoxSearch(f"enumeration would create {total} partial vectors")
        rows = np.repeat(np.arange(len(xs)), counts)
        offsets = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
        vals = lo[rows] + offsets
        xs = xs[rows]
        xs[:, i] = vals
        rem = rem[rows] - d[i] * (vals - mid[rows]) ** 2
    if stop_level == 0:
        return xs
    y = xs[:, 1:] - c[1:]
    mid = c[0] - y @ mu[0, 1:]
    half = np.sqrt(np.maximum(rem, 0.0) / d[0])
    return xs, mid, half


def _integer_roots(a: int, b: np.ndarray, cc: np.ndarray, mid, half):
    """Integer solutions y of a y^2 + 2 b y + c = 0, optionally all y in a window.

    Returns (row indices, values).
    """
    rows_out, vals_out = [], []
    if a != 0:
        disc = b * b - a * cc
        ok = disc >= 0
        r = np.zeros_like(disc)
        r[ok] = np.rint(np.sqrt(disc[ok].astype(float))).astype(np.int64)
        ok &= r * r == disc
        for sign in (1, -1):
            num = -b + sign * r
            good = ok & (num % a == 0)
            if sign == -1:
                good &= r != 0
            idx = np.nonzero(good)[0]
            rows_out.append(idx)
            vals_out.append(num[idx] // a)
    else:
        lin = b != 0
        good = lin & ((cc % (2 * np.where(lin, b, 1))) == 0)
        idx = np.nonzero(good)[0]
        rows_out.append(idx)
        vals_out.append(-cc[idx] // (2 * b[idx]))
        free = np.nonzero((b == 0) & (cc == 0))[0]
        for i in free:
            lo = int(math.ceil(mid[i] - half[i]))
            hi = int(math.floor(mid[i] + half[i]))
            if hi >= lo:
                rows_out.append(np.full(hi - lo + 1, i))
                vals_out.append(np.arange(lo, hi + 1, dtype=np.int64))
    if not rows_out:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(rows_out).astype(np.int64), np.concatenate(vals_out).astype(np.int64)


def isotropic_points(form: np.ndarray, majorant: np.ndarray, bound: float) -> np.ndarray:
    """Nonzero integer ``y`` with ``y^T form y = 0`` and ``y^T M y / 2 <= bound``.

    ``form`` is an integer symmetric matrix.  All coordinates but the
    first are enumerated; the first is then solved for exactly.
    """
    form = np.asarray(form, dtype=np.int64)
    m = np.asarray(majorant, dtype=float)
    n = form.shape[0]
    if n == 1:
        return np.zeros((0, 1), dtype=np.int64) if form[0, 0] != 0 else ellipsoid_points(m, bound)
    partial, mid, half = ellipsoid_points(m, bound, stop_level=1)
    rest = partial[:, 1:]
    b = rest @ form[0, 1:]
    cc = np.einsum("ij,jk,ik->i", rest, form[1:, 1:], rest)
    rows, vals = _integer_roots(int(form[0, 0]), b, cc, mid, half)
    pts = partial[rows].copy()
    pts[:, 0] = vals
    pts = np.unique(pts, axis=0)
    pts = pts[np.any(pts != 0, axis=1)]
    q_maj = 0.5 * np.einsum("ij,jk,ik->i", pts, m, pts)
    pts = pts[q_maj <= bound * (1 + 1e-12) + 1e-12]
    return pts


@dataclass(frozen=True)
class IsotropicVectorRecord:
    """A nonzero isotropic vector in ``L'`` with its primitive decomposition.

    ``vector`` is in rational coordinates with respect to the basis of L.
    ``multiplier`` is the ``n`` with ``vector = n * primitive_part`` and the
    primitive part primitive in ``L'`` (or in ``L`` when ``in_lattice``).
    """

    vector: tuple
    primitive: bool
    multiplier: int
    in_lattice: bool
    level: int | None = None
    disc_class: tuple | None = None

    @property
    def primitive_part(self) -> tuple:
        return tuple(x / self.multiplier for x in self.vector)


def level_of(lam, L: GramLattice) -> int:
    """Positive generator of the ideal ``{(lam, x) : x in L}``."""
    vals = mat_vec(L.gram, [Fraction(x) for x in lam])
    if all(v == 0 for v in vals):
        raise ZeroVector("level of the zero vector is undefined")
    if any(v.denominator != 1 for v in vals):
        raise NotInDualLattice("level_of expects a vector in the lattice")
    return reduce(math.gcd, (abs(int(v)) for v in vals))


def enumerate_isotropic_vectors(L: GramLattice, majorant, bound: float, dual: bool = True) -> list:
    """All nonzero isotropic ``lam`` in ``L'`` (or in ``L``) with majorant value <= bound.

    ``majorant`` is the Gram matrix (in the basis of L) of a positive
    definite form; the majorant value of ``lam`` is ``lam^T M lam / 2``.
    """
    m = np.asarray(majorant, dtype=float)
    D = discriminant_form(L)
    if dual:
        ginv = L.gram_inverse
        adj = np.array([[int(x * L.det) for x in row] for row in ginv], dtype=np.int64)
        ginv_f = L.gram_inverse_array
        pts = isotropic_points(adj, ginv_f @ m @ ginv_f, bound)
    else:
        pts = isotropic_points(L.gram_array, m, bound)
    out = []
    for y in pts:
        y = [int(t) for t in y]
        mult = reduce(math.gcd, (abs(t) for t in y))
        if dual:
            vec = mat_vec(L.gram_inverse, y)
        else:
            vec = tuple(Fraction(t) for t in y)
        in_lattice = all(v.denominator == 1 for v in vec)
        level = cls = None
        if in_lattice:
            level = level_of(vec, L)
            cls = D.reduce([v / level for v in vec])
        out.append(IsotropicVectorRecord(tuple(vec), mult == 1, mult, in_lattice, level, cls))
    return out


# ------------------------------------------------------------------- cusps

@dataclass(frozen=True)
class CuspComplement:
    """Data attached to a primitive isotropic ``z`` in ``L`` and a dual ``z'``.

    ``K_basis`` holds integer coordinate rows (in the basis of L) of a basis
    of ``K = L ∩ z^⊥ ∩ z'^⊥``; ``K`` is the lattice with that Gram matrix.
    """

    L: GramLattice
    z: tuple
    z_prime: tuple
    level: int
    K: GramLattice
    K_basis: tuple
    zeta_vec: tuple
    B_coeff: Fraction

    @property
    def N_z(self) -> int:
        return self.level

    @cached_property
    def _K_solver(self):
        b = [[Fraction(x) for x in row] for row in self.K_basis]
        # normal equations in the Euclidean inner product of coordinates
        gram_e = [[sum(x * y for x, y in zip(r1, r2)) for r2 in b] for r1 in b]
        return b, frac_inverse(gram_e)

    def to_K_coords(self, x) -> tuple:
        """Coordinates in the basis of K of a vector of ``K ⊗ Q``."""
        b, inv = self._K_solver
        rhs = [sum((Fraction(a) * c for a, c in zip(row, x)), Fraction(0)) for row in b]
        coords = mat_vec(inv, rhs)
        back = tuple(sum((c * row[r] for c, row in zip(coords, b)), Fraction(0)) for r in range(len(x)))
        if back != tuple(Fraction(t) for t in x):
            raise LatticeError("vector does not lie in K ⊗ Q")
        return coords

    def from_K_coords(self, c) -> tuple:
        n = self.L.rank
        return tuple(sum((Fraction(ci) * row[r] for ci, row in zip(c, self.K_basis)), Fraction(0)) for r in range(n))

    def project(self, lam) -> tuple:
        """``lam_K`` in the basis of L."""
        L = self.L
        lam = [Fraction(x) for x in lam]
        a = L.bilinear(lam, self.z)
        b = L.bilinear(lam, self.z_prime)
        zz = L.bilinear(self.z_prime, self.z_prime)
        return tuple(x - a * zp + a * zz * zi - b * zi for x, zp, zi in zip(lam, self.z_prime, self.z))

    @property
    def zeta_K(self) -> tuple:
        return self.to_K_coords(self.project(self.zeta_vec))

    @cached_property
    def z_tilde(self) -> tuple:
        qzp = self.L.q(self.z_prime)
        return tuple(a - qzp * b for a, b in zip(self.z_prime, self.z))


def k_projection(lam, cusp: CuspComplement) -> tuple:
    """Orthogonal projection of ``lam`` to ``K ⊗ Q`` in K coordinates."""
    return cusp.to_K_coords(cusp.project(lam))


def make_cusp(L: GramLattice, z, z_prime=None) -> CuspComplement:
    """Cusp data for a primitive isotropic ``z`` in L.

    If ``z_prime`` is omitted a vector of ``L'`` with ``(z, z') = 1`` is
    chosen (inside L when the level of z is 1).
    """
    z = tuple(Fraction(x) for x in z)
    if any(x.denominator != 1 for x in z) or L.q(z) != 0:
        raise LatticeError("z must be an isotropic lattice vector")
    if reduce(math.gcd, (abs(int(x)) for x in z)) != 1:
        raise LatticeError("z must be primitive")
    level = level_of(z, L)
    gz = [int(x) for x in mat_vec(L.gram, z)]
    if z_prime is None:
        if level == 1:
            _, coeffs = ext_gcd_combination(gz)
            z_prime = tuple(Fraction(c) for c in coeffs)
        else:
            # z' = G^{-1} e with z^T e = 1
            _, coeffs = ext_gcd_combination([int(x) for x in z])
            z_prime = mat_vec(L.gram_inverse, coeffs)
    z_prime = tuple(Fraction(x) for x in z_prime)
    if L.bilinear(z, z_prime) != 1 or not L.in_dual(z_prime):
        raise LatticeError("z' must lie in L' with (z, z') = 1")
    gzp = mat_vec(L.gram, z_prime)
    den = reduce(math.lcm, (x.denominator for x in gzp), 1)
    rows = [gz, [int(x * den) for x in gzp]]
    basis = integer_kernel(rows)
    K = build_lattice(mat_mul(mat_mul(basis, L.gram), list(map(list, zip(*basis)))), name="K")
    _, coeffs = ext_gcd_combination(gz)
    zeta = tuple(Fraction(c) for c in coeffs)
    cusp = CuspComplement(L, z, z_prime, level, K, tuple(tuple(r) for r in basis), zeta, Fraction(0))
    # zeta = zeta_K + N z' + B z
    rest = [a - b - level * c for a, b, c in zip(zeta, cusp.project(zeta), z_prime)]
    idx = next(i for i, x in enumerate(z) if x != 0)
    B = rest[idx] / z[idx]
    if any(r != B * x for r, x in zip(rest, z)):
        raise AssertionError("zeta decomposition failed")
    return CuspComplement(L, z, z_prime, level, K, cusp.K_basis, zeta, B)


def _candidates(rank: int, m: int):
    """Integer vectors of max-norm exactly m, simplest first."""
    cands = [v for v in itertools.product(range(-m, m + 1), repeat=rank) if max(map(abs, v)) == m]
    cands.sort(key=lambda v: (sum(map(abs, v)), sum(1 for x in v if x), tuple(-x for x in v)))
    return cands


def find_level_one_isotropic(L: GramLattice, search_bound: int = 2) -> tuple:
    """A primitive isotropic ``v`` with ``(v, L) = Z``, smallest coordinates first."""
    for m in range(1, search_bound + 1):
        for v in _candidates(L.rank, m):
            if reduce(math.gcd, map(abs, v)) != 1 or L.q(v) != 0:
                continue
            if level_of(v, L) == 1:
                return v
    raise NotFoundWithinBound(f"no level-1 isotropic vector with max-norm <= {search_bound}")


def split_hyperbolic(L: GramLattice, search_bound: int = 2) -> CuspComplement:
    """Find a primitive isotropic ``z`` of level 1 and build its cusp data.

    The returned ``z'`` lies in L.  Raises ``NotFoundWithinBound`` if no
    such vector has coordinates bounded by ``search_bound``.
    """
    return make_cusp(L, find_level_one_isotropic(L, search_bound))


def pi_class_map(z, L: GramLattice) -> tuple:
    """Class of ``z / N_z`` in ``L'/L`` for a primitive isotropic ``z``."""
    level = level_of(z, L)
    v = [Fraction(x) / level for x in z]
    if not L.in_dual(v):
        raise NotInDualLattice("z / N_z is not in L'")
    D = discriminant_form(L)
    cls = D.reduce(v)
    assert D.q(cls) == 0
    return cls


@dataclass(frozen=True)
class PiSublatticeData:
    """``L_0'/L``, the map ``pi`` to ``K'/K`` and its fibres."""

    classes: tuple      # elements delta of L'/L with (delta, z) = 0 mod N_z
    image: dict         # delta -> element of K'/K
    fibers: dict        # element of K'/K -> list of delta


def pi_sublattice_data(cusp: CuspComplement) -> PiSublatticeData:
    L = cusp.L
    D = discriminant_form(L)
    DK = discriminant_form(cusp.K)
    N = cusp.level
    zeta_K = cusp.zeta_K
    classes, image = [], {}
    fibers = {mu: [] for mu in DK.elements}
    for delta in D.elements:
        lam = D.lift(delta)
        a = L.bilinear(lam, cusp.z)
        if a % N != 0:
            continue
        img = [x + (a / N) * y for x, y in zip(k_projection(lam, cusp), zeta_K)]
        mu = DK.reduce(img)
        classes.append(delta)
        image[delta] = mu
        fibers[mu].append(delta)
    return PiSublatticeData(tuple(classes), image, fibers)


def fiber_lifts(mu_K, cusp: CuspComplement) -> list:
    """Classes ``lam - ((lam, zeta)/N) z + (b/N) z`` for ``b in Z/N``.

    ``mu_K`` is a vector of ``K'`` in K coordinates; the result lists the
    classes in ``L'/L`` indexed by ``b = 0, ..., N - 1``.
    """
    L = cusp.L
    D = discriminant_form(L)
    N = cusp.level
    lam = cusp.from_K_coords(mu_K)
    a = L.bilinear(lam, cusp.zeta_vec)
    base = [x - (a / N) * zi for x, zi in zip(lam, cusp.z)]
    return [D.reduce([x + Fraction(b, N) * zi for x, zi in zip(base, cusp.z)]) for b in range(N)]


def lattice_from_dict(obj: dict) -> GramLattice:
    """``{"name": ..., "gram": [[...]]}`` or ``{"name": ..., "blocks": ["U", "A1(-1)", [[2]]]}``."""
    name = str(obj.get("name", ""))
    if "gram" in obj:
        return build_lattice(obj["gram"], name)
    if "blocks" in obj:
        return direct_sum(obj["blocks"], name)
    raise LatticeError("lattice description needs a 'gram' or a 'blocks' entry")


def load_lattice(path) -> GramLattice:
    with open(path, encoding="utf-8") as fh:
        return lattice_from_dict(json.load(fh))
