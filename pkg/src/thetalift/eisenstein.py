"""Vector-valued non-holomorphic Eisenstein series for the Weil representation.

For an isotropic profile vector ``v`` in ``C[L'/L]`` and integer weight
``k`` the series is

    E(tau, s) = 1/2 * sum_{M in <T> \\ Mp2(Z)} (v^s e_beta)|_k M,

a sum over all coprime bottom rows ``(c, d)`` (each metaplectic coset
contributes twice, and ``Z^2`` acts trivially for even signature).  The
two lifts cancel the 1/2, so here every coprime ``(c, d)`` is summed
once with the principal branch.  The constant term is then
``(v + (-1)^kappa v*) v^s + c(0, s) v^(1-s-k)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lattice import DiscriminantForm, GramLattice, discriminant_form
from .special import e_of
from .weil import (IDENTITY, MetaplecticElement, WeilRepresentation, Z, mp2_mul,
                   reduce_to_fundamental_domain)


class ConvergenceMarginViolated(ValueError):
    pass


class NodeCountTooSmall(ValueError):
    pass


class IllConditionedSplit(ArithmeticError):
    pass


MIN_CONVERGENCE_MARGIN = 2.5


@dataclass(frozen=True)
class EisParams:
    """Weight, profile and spectral parameter of an Eisenstein series.

    ``profile`` maps isotropic elements of ``L'/L`` to coefficients.
    """

    k: int
    kappa: int
    profile: tuple  # ((element, coefficient), ...)
    s: complex

    @classmethod
    def for_lattice(cls, L: GramLattice, k: int, beta=None, s=3.0, profile=None) -> "EisParams":
        D = discriminant_form(L)
        if profile is None:
            beta = D.zero if beta is None else tuple(beta)
            profile = {beta: 1.0}
        for e in profile:
            if D.q(tuple(e)) != 0:
                raise ValueError(f"profile element {e} is not isotropic")
        b_plus, b_minus = L.signature
        if (b_minus - b_plus) % 2:
            raise ValueError("only even b+ - b- (integral weight) is supported")
        kappa = (b_minus - b_plus) // 2 + k
        items = tuple(sorted((tuple(e), complex(c)) for e, c in profile.items()))
        return cls(k, kappa, items, complex(s))

    def with_s(self, s) -> "EisParams":
        return EisParams(self.k, self.kappa, self.profile, complex(s))


def profile_vector(params: EisParams, D: DiscriminantForm) -> np.ndarray:
    v = np.zeros(len(D), dtype=complex)
    for e, c in params.profile:
        v[D.index[e]] += c
    return v


def coset_reps(B: float) -> list:
    """Representatives with coprime bottom rows: ``c > 0`` and ``c^2 + d^2 <= B^2``, plus ``(0, +-1)``.

    Ordered by ``(c^2 + d^2, c, d)``; each carries the principal branch.
    """
    if B < 1:
        raise ValueError("B must be at least 1")
    out = [MetaplecticElement(1, 0, 0, 1, 1), MetaplecticElement(-1, 0, 0, -1, 1)]
    bb = B * B * (1 + 1e-12)
    cmax = int(math.floor(B))
    pairs = []
    for c in range(1, cmax + 1):
        dmax = int(math.floor(math.sqrt(max(bb - c * c, 0.0))))
        for d in range(-dmax, dmax + 1):
            if math.gcd(c, d) == 1:
                pairs.append((c * c + d * d, c, d))
    pairs.sort()
    for _, c, d in pairs:
        # a d - b c = 1 via the inverse of d modulo c
        if c == 1:
            a, b = 1, d - 1
        else:
            a = pow(d, -1, c)
            b = (a * d - 1) // c
        out.append(MetaplecticElement(a, b, c, d, 1))
    return out


def coset_tail_bound(s, k: int, B: float) -> float:
    """``2 pi / (sigma - 1) * B^(2 - 2 sigma)`` with ``sigma = Re(s) + k/2``."""
    sigma = complex(s).real + k / 2.0
    return 2.0 * math.pi / (sigma - 1.0) * B ** (2.0 - 2.0 * sigma)


@dataclass
class EisensteinValue:
    tau: np.ndarray
    values: np.ndarray       # shape (len(tau), |D|)
    tail_estimate: np.ndarray
    bound: float


class VectorEisenstein:
    """A truncated coset-sum evaluator for a fixed lattice, profile and ``s``."""

    def __init__(self, L: GramLattice, params: EisParams, B: float = 40.0, rep: WeilRepresentation | None = None):
        s = complex(params.s)
        if (2 * s + params.k).real < MIN_CONVERGENCE_MARGIN:
            raise ConvergenceMarginViolated(f"Re(2s + k) = {(2 * s + params.k).real} < {MIN_CONVERGENCE_MARGIN}")
        self.L = L
        self.params = params
        self.B = float(B)
        self.rep = rep if rep is not None else WeilRepresentation(discriminant_form(L))
        self.D = self.rep.D
        vec = profile_vector(params, self.D)
        reps = coset_reps(B)
        cs, ds, vecs = [], [], []
        for M in reps:
            cs.append(M.c)
            ds.append(M.d)
            vecs.append(self.rep.inverse(M) @ vec)
            if M.c > 0:
                ZM = mp2_mul(Z, M)
                cs.append(ZM.c)
                ds.append(ZM.d)
                vecs.append(self.rep.inverse(ZM) @ vec)
        self.c = np.array(cs, dtype=float)
        self.d = np.array(ds, dtype=float)
        self.vectors = np.array(vecs)
        self.vec_norm = float(np.abs(self.vectors).max()) if len(vecs) else 0.0

    def __call__(self, tau, chunk: int = 256) -> np.ndarray:
        """Values at one or more points; shape ``(len(tau), |D|)``."""
        tau = np.atleast_1d(np.asarray(tau, dtype=complex))
        k = self.params.k
        s = self.params.s
        out = np.empty((len(tau), len(self.D)), dtype=complex)
        for lo in range(0, len(tau), chunk):
            t = tau[lo:lo + chunk]
            w = self.c[None, :] * t[:, None] + self.d[None, :]
            absw2 = w.real ** 2 + w.imag ** 2
            f = w ** (-k) * np.exp(s * np.log(t.imag[:, None] / absw2))
            out[lo:lo + chunk] = f @ self.vectors
        return out

    def tail_estimate(self, tau) -> np.ndarray:
        """Bound for the omitted cosets: ``|c tau + d|^2 >= lam_min (c^2 + d^2)``."""
        tau = np.atleast_1d(np.asarray(tau, dtype=complex))
        u, v = tau.real, tau.imag
        # smallest eigenvalue of [[u^2 + v^2, u], [u, 1]]
        tr = u * u + v * v + 1.0
        det = v * v
        lam = 0.5 * (tr - np.sqrt(tr * tr - 4 * det))
        sigma = self.params.s.real + self.params.k / 2.0
        return (coset_tail_bound(self.params.s, self.params.k, self.B) * v ** self.params.s.real
                * lam ** (-sigma) * self.vec_norm)

    def evaluate(self, tau) -> EisensteinValue:
        tau = np.atleast_1d(np.asarray(tau, dtype=complex))
        return EisensteinValue(tau, self(tau), self.tail_estimate(tau), self.B)

    def reduced(self, tau) -> np.ndarray:
        """Values computed at the reduction of each point to the fundamental domain.

        Uses ``E(tau) = phi_g(tau)^(-2k) rho(g)^(-1) E(g tau)``; accurate
        also for small ``Im(tau)`` where the plain coset sum converges slowly.
        """
        tau = np.atleast_1d(np.asarray(tau, dtype=complex))
        groups = {}
        images = np.empty(len(tau), dtype=complex)
        for i, t in enumerate(tau):
            g, w = reduce_to_fundamental_domain(t)
            images[i] = w
            groups.setdefault(g, []).append(i)
        vals = self(images)
        out = np.empty_like(vals)
        k = self.params.k
        for g, idx in groups.items():
            idx = np.array(idx)
            if g == IDENTITY:
                out[idx] = vals[idx]
                continue
            rinv = self.rep.inverse(g)
            phi2 = g.c * tau[idx] + g.d
            out[idx] = (phi2 ** (-k))[:, None] * (vals[idx] @ rinv.T)
        return out


def eval_E(L: GramLattice, params: EisParams, tau, B: float = 40.0) -> EisensteinValue:
    return VectorEisenstein(L, params, B).evaluate(tau)


def eval_E_chi(L: GramLattice, k: int, beta, chi, s, tau, B: float = 40.0) -> np.ndarray:
    """``sum_{n in (Z/N)^x} chi(n) E_{k, n beta}(tau, s)`` with ``N`` the order of beta."""
    D = discriminant_form(L)
    beta = tuple(beta)
    N = D.element_order(beta)
    total = 0
    for n in range(N):
        if math.gcd(n, N) != 1:
            continue
        val = chi(n) if N > 1 else 1.0
        params = EisParams.for_lattice(L, k, D.scale(n, beta), s)
        total = total + val * VectorEisenstein(L, params, B)(tau)
    return total


@dataclass
class CoefficientSample:
    gamma: tuple
    n: float
    v: float
    value: complex
    est_error: float


def fourier_coefficient(E: VectorEisenstein, gamma, n: float, v: float, nodes: int = 64,
                        reduced: bool = False) -> CoefficientSample:
    """``c(gamma, n, s, v)`` by the trapezoidal rule over one period in ``u``."""
    if nodes < 4:
        raise NodeCountTooSmall("need at least 4 nodes")
    gi = E.D.index[tuple(gamma)]
    u = np.arange(nodes) / nodes
    vals = (E.reduced if reduced else E)(u + 1j * v)[:, gi]
    phase = e_of(-n * u)
    full = complex(np.mean(vals * phase))
    half = complex(np.mean(vals[::2] * phase[::2]))
    return CoefficientSample(tuple(gamma), float(n), float(v), full, abs(full - half) + 1e-16 * abs(full))


@dataclass
class ConstantTermSplit:
    a: complex
    c0: complex
    condition: float
    samples: tuple


def constant_term_split(E: VectorEisenstein, gamma, v1: float, v2: float, nodes: int = 64) -> ConstantTermSplit:
    """Solve ``a v^s + c0 v^(1-s-k)`` through the constant terms at two heights."""
    s, k = E.params.s, E.params.k
    if abs(v1 - v2) < 1e-3 * max(v1, v2):
        raise IllConditionedSplit("v1 and v2 are too close")
    if abs((2 * s + k - 1)) < 1e-6:
        raise IllConditionedSplit("exponents s and 1 - s - k coincide")
    m1 = fourier_coefficient(E, gamma, 0.0, v1, nodes)
    m2 = fourier_coefficient(E, gamma, 0.0, v2, nodes)
    A = np.array([[v1 ** s, v1 ** (1 - s - k)], [v2 ** s, v2 ** (1 - s - k)]], dtype=complex)
    # column scaling so the condition number reflects the geometry only
    scale = np.abs(A).max(axis=0)
    cond = float(np.linalg.cond(A / scale))
    if cond > 1e10:
        raise IllConditionedSplit(f"condition number {cond:.3g}")
    a, c0 = np.linalg.solve(A, np.array([m1.value, m2.value]))
    return ConstantTermSplit(complex(a), complex(c0), cond, (m1, m2))


def modularity_residual(E: VectorEisenstein, g: MetaplecticElement, tau) -> tuple:
    """``E(g tau) - phi_g(tau)^(2k) rho(g) E(tau)`` and the combined tail estimate."""
    k = E.params.k
    lhs = E(g.act(tau))[0]
    rhs = (g.c * tau + g.d) ** k * (E.rep.evaluate(g) @ E(tau)[0])
    tail = float(E.tail_estimate(g.act(tau))[0] + abs((g.c * tau + g.d) ** k) * E.tail_estimate(tau)[0])
    return lhs - rhs, tail


def scalar_constant_term_coefficient(k: int, s) -> complex:
    """Closed form of ``c(0, 0, s)`` for the scalar series of even weight ``k``.

    Trivial discriminant group, profile ``e_0``:
    ``2 i^(-k) 2^(2-k-2s) pi Gamma(2s+k-1) zeta(2s+k-1) / (Gamma(s) Gamma(s+k) zeta(2s+k))``.
    Used as an independent check of the numerical constant-term split.
    """
    from .special import gamma, riemann_zeta
    s = complex(s)
    return (2 * (1j) ** (-k) * 2 ** (2 - k - 2 * s) * math.pi * gamma(2 * s + k - 1) * riemann_zeta(2 * s + k - 1)
            / (gamma(s) * gamma(s + k) * riemann_zeta(2 * s + k)))
