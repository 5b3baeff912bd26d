"""The metaplectic group Mp2(Z) and the Weil representation.

An element of Mp2(Z) is a matrix in SL2(Z) together with a holomorphic
square root ``phi`` of ``c tau + d``.  Every such root is
``branch_sign * principal_sqrt(c tau + d)``, so an element is stored as
the four matrix entries and a sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import DiscriminantForm
from .special import e_of, principal_sqrt


class BranchResolutionAmbiguous(ArithmeticError):
    pass


class DecompositionFailure(AssertionError):
    pass


_PROBE = 2j


@dataclass(frozen=True)
class MetaplecticElement:
    a: int
    b: int
    c: int
    d: int
    branch_sign: int = 1

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError("matrix must have determinant 1")
        if self.branch_sign not in (1, -1):
            raise ValueError("branch_sign must be +1 or -1")

    @property
    def matrix(self) -> tuple:
        return ((self.a, self.b), (self.c, self.d))

    def act(self, tau):
        return (self.a * tau + self.b) / (self.c * tau + self.d)

    def phi(self, tau):
        return self.branch_sign * principal_sqrt(self.c * tau + self.d)

    def __mul__(self, other: "MetaplecticElement") -> "MetaplecticElement":
        return mp2_mul(self, other)


IDENTITY = MetaplecticElement(1, 0, 0, 1, 1)
T = MetaplecticElement(1, 1, 0, 1, 1)
S = MetaplecticElement(0, -1, 1, 0, 1)
Z = MetaplecticElement(-1, 0, 0, -1, 1)  # phi(tau) = principal_sqrt(-1) = i


def T_power(n: int) -> MetaplecticElement:
    return MetaplecticElement(1, n, 0, 1, 1)


def mp2_mul(x: MetaplecticElement, y: MetaplecticElement) -> MetaplecticElement:
    """Product ``(M1 M2, phi1(M2 tau) phi2(tau))``."""
    a = x.a * y.a + x.b * y.c
    b = x.a * y.b + x.b * y.d
    c = x.c * y.a + x.d * y.c
    d = x.c * y.b + x.d * y.d
    ratio = x.phi(y.act(_PROBE)) * y.phi(_PROBE) / principal_sqrt(c * _PROBE + d)
    if abs(ratio - 1) < 1e-6:
        sign = 1
    elif abs(ratio + 1) < 1e-6:
        sign = -1
    else:
        raise BranchResolutionAmbiguous(f"branch ratio {ratio} is not +-1")
    return MetaplecticElement(a, b, c, d, sign)


def mp2_inverse(x: MetaplecticElement) -> MetaplecticElement:
    cand = MetaplecticElement(x.d, -x.b, -x.c, x.a, 1)
    prod = mp2_mul(x, cand)
    return cand if prod.branch_sign == 1 else MetaplecticElement(x.d, -x.b, -x.c, x.a, -1)


class WeilRepresentation:
    """The Weil representation attached to a discriminant form.

    Matrices act on column vectors indexed by ``D.elements``:
    ``rho(T) e_g = e(q(g)) e_g`` and
    ``rho(S) e_g = sqrt(i)^(b- - b+) / sqrt(|D|) sum_d e(-(g, d)) e_d``.
    """

    def __init__(self, D: DiscriminantForm, signature=None):
        self.D = D
        b_plus, b_minus = signature if signature is not None else D.lattice.signature
        if (b_plus - b_minus) % 2 != (D.lattice.rank % 2) or (b_plus + b_minus) != D.lattice.rank:
            raise ValueError("signature does not match the lattice")
        self.signature = (b_plus, b_minus)
        n = len(D)
        qv = np.array([float(D.q_values[e]) for e in D.elements])
        self.t_diag = e_of(qv)
        pref = e_of(np.array((b_minus - b_plus) / 8.0)) / math.sqrt(n)
        # column gamma, row delta: e(-(gamma, delta))
        self.S = complex(pref) * e_of(-D.bilinear_table)
        self.T = np.diag(self.t_diag)
        self._cache = {}

    @property
    def dim(self) -> int:
        return len(self.D)

    @property
    def Z(self) -> np.ndarray:
        return self.S @ self.S

    def t_power(self, n: int) -> np.ndarray:
        return np.diag(self.t_diag ** n)

    def z_formula(self) -> np.ndarray:
        """``rho(Z) e_g = i^(b- - b+) e_{-g}`` built directly."""
        b_plus, b_minus = self.signature
        m = np.zeros((self.dim, self.dim), dtype=complex)
        for j, i in enumerate(self.D.neg_permutation):
            m[i, j] = 1j ** ((b_minus - b_plus) % 4)
        return m

    def word(self, g: MetaplecticElement):
        """Right multipliers ``w_1, ..., w_r`` with ``g w_1 ... w_r`` upper triangular."""
        h = g
        ws = []
        while h.c != 0:
            n = h.d // h.c
            if n:
                w = T_power(-n)
                ws.append(("T", -n))
                h = mp2_mul(h, w)
            ws.append(("S", 0))
            h = mp2_mul(h, S)
        return ws, h

    def evaluate(self, g: MetaplecticElement) -> np.ndarray:
        key = (g.a, g.b, g.c, g.d, g.branch_sign)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        ws, h = self.word(g)
        # rho(h) for h = (+-1, b, 0, +-1)
        if h.a == 1:
            base = MetaplecticElement(1, h.b, 0, 1, 1)
            r = self.t_power(h.b)
        else:
            base = mp2_mul(Z, T_power(-h.b))
            r = self.Z @ self.t_power(-h.b)
        if (base.a, base.b, base.c, base.d) != (h.a, h.b, h.c, h.d):
            raise DecompositionFailure("unexpected reduced element")
        if base.branch_sign != h.branch_sign:
            # h = base * Z^2 with Z^2 = (I, -1)
            r = r @ self.Z @ self.Z
        # g = h w_r^{-1} ... w_1^{-1}
        for kind, n in reversed(ws):
            if kind == "T":
                r = r * np.conj(self.t_diag ** n)[None, :]
            else:
                r = r @ self.S.conj().T
        self._cache[key] = r
        return r

    def inverse(self, g: MetaplecticElement) -> np.ndarray:
        return self.evaluate(g).conj().T


def rho_generators(D: DiscriminantForm, signature=None):
    rep = WeilRepresentation(D, signature)
    return rep.T, rep.S


def rho_evaluate(g: MetaplecticElement, D: DiscriminantForm, signature=None) -> np.ndarray:
    return WeilRepresentation(D, signature).evaluate(g)


def slash(f_at_g_tau: np.ndarray, g: MetaplecticElement, k: int, tau, rep: WeilRepresentation) -> np.ndarray:
    """``(f|_k g)(tau) = phi(tau)^(-2k) rho(g)^(-1) f(g tau)`` for integer k."""
    return g.phi(tau) ** (-2 * k) * (rep.inverse(g) @ f_at_g_tau)


def reduce_to_fundamental_domain(tau, max_steps: int = 10_000):
    """Element ``g`` of Mp2(Z) with ``g tau`` in the standard fundamental domain."""
    g = IDENTITY
    w = complex(tau)
    for _ in range(max_steps):
        n = math.floor(w.real + 0.5)
        if n:
            g = mp2_mul(T_power(-n), g)
            w = w - n
        if abs(w) < 1 - 1e-15:
            g = mp2_mul(S, g)
            w = -1 / w
        else:
            return g, w
    raise DecompositionFailure("fundamental domain reduction did not terminate")
