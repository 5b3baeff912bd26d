"""Exact and numeric checks of the Gamma and zeta identities behind the Fourier expansion."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .special import EvaluationAtPole, PoleAtOne, e_of, gamma, rgamma, zeta_plus, zeta_signed

POLE_GUARD = 0.1


# ------------------------------------------------------------ exact values

@dataclass(frozen=True)
class RationalPi:
    """The exact number ``coeff * 2^two_power * pi^pi_power``.

    Canonical form: ``coeff`` is a fraction with odd numerator and odd
    denominator (all powers of two live in ``two_power``); zero is stored
    as ``RationalPi(0, 0, 0)``.
    """

    coeff: Fraction
    pi_power: int = 0
    two_power: int = 0

    def __post_init__(self):
        c = Fraction(self.coeff)
        t = self.two_power
        p = self.pi_power
        if c == 0:
            t, p = 0, 0
        else:
            num, den = c.numerator, c.denominator
            while num % 2 == 0:
                num //= 2
                t += 1
            while den % 2 == 0:
                den //= 2
                t -= 1
            c = Fraction(num, den)
        object.__setattr__(self, "coeff", c)
        object.__setattr__(self, "two_power", t)
        object.__setattr__(self, "pi_power", p)

    @property
    def rational(self) -> Fraction:
        """``coeff * 2^two_power``."""
        return self.coeff * Fraction(2) ** self.two_power

    def __add__(self, other: "RationalPi") -> "RationalPi":
        if self.coeff == 0:
            return other
        if other.coeff == 0:
            return self
        if self.pi_power != other.pi_power:
            raise ValueError("cannot add different powers of pi exactly")
        return RationalPi(self.rational + other.rational, self.pi_power)

    def __neg__(self) -> "RationalPi":
        return RationalPi(-self.coeff, self.pi_power, self.two_power)

    def __sub__(self, other: "RationalPi") -> "RationalPi":
        return self + (-other)

    def __mul__(self, other: "RationalPi") -> "RationalPi":
        return RationalPi(self.coeff * other.coeff, self.pi_power + other.pi_power,
                          self.two_power + other.two_power)

    def __float__(self) -> float:
        return float(self.coeff) * 2.0 ** self.two_power * math.pi ** self.pi_power


def half_gamma_pair(a: int, b: int) -> RationalPi:
    """``Gamma(1/2 + a) Gamma(1/2 + b)`` for integers ``a, b >= 0``.

    ``Gamma(1/2 + n) = sqrt(pi) (2n)! / (4^n n!)``, so the product is rational times pi.
    """
    if a < 0 or b < 0:
        raise ValueError("only non-negative shifts are supported")
    ra = Fraction(math.factorial(2 * a), 4 ** a * math.factorial(a))
    rb = Fraction(math.factorial(2 * b), 4 ** b * math.factorial(b))
    return RationalPi(ra * rb, 1)


def gamma_binomial_lhs_exact(kappa: int, s: int) -> RationalPi:
    """``sum_j (-1)^j C(kappa, 2j) Gamma(1/2 + j) Gamma(1/2 + s - j)`` for integers ``s >= kappa >= 0``."""
    if kappa < 0 or s < kappa:
        raise ValueError("need integers s >= kappa >= 0")
    total = RationalPi(0)
    for j in range(kappa // 2 + 1):
        term = RationalPi(Fraction((-1) ** j * math.comb(kappa, 2 * j))) * half_gamma_pair(j, s - j)
        total = total + term
    return total


def gamma_binomial_rhs_exact(kappa: int, s: int) -> RationalPi:
    """``2^(kappa - 2s) pi Gamma(1 + 2s - kappa) / Gamma(1 + s - kappa)``."""
    if kappa < 0 or s < kappa:
        raise ValueError("need integers s >= kappa >= 0")
    ratio = Fraction(math.factorial(2 * s - kappa), math.factorial(s - kappa))
    return RationalPi(ratio, 1, kappa - 2 * s)


# ------------------------------------------------------------- pole guards

def _near_nonpositive_integer(z: complex, guard: float) -> bool:
    z = complex(z)
    if z.real > guard:
        return False
    n = min(0, round(z.real))
    return abs(z - n) < guard


def guard_gamma(*args, guard: float = POLE_GUARD) -> None:
    for a in args:
        if _near_nonpositive_integer(a, guard):
            raise EvaluationAtPole(f"Gamma argument {complex(a)} is within {guard} of a pole")


def guard_zeta(*args, guard: float = POLE_GUARD) -> None:
    for a in args:
        if abs(complex(a) - 1) < guard:
            raise PoleAtOne(f"zeta argument {complex(a)} is within {guard} of 1")


def _relative(lhs: complex, rhs: complex, floor: float = 0.0) -> float:
    scale = max(abs(lhs), abs(rhs), floor)
    return 0.0 if scale == 0 else abs(lhs - rhs) / scale


@dataclass
class IdentityResult:
    lhs: complex
    rhs: complex
    residual: float


def _cauchy_mean(f, s0: complex, radius: float = 0.2, nodes: int = 48) -> complex:
    """Value at ``s0`` of a function analytic in a disc around it (removable singularity allowed)."""
    th = 2 * math.pi * (np.arange(nodes) + 0.5) / nodes
    return complex(np.mean([f(s0 + radius * cmath.exp(1j * t)) for t in th]))


def _guarded(lhs_fn, rhs_fn, s: complex, check, at_pole: str, floor: float = 0.0) -> IdentityResult:
    """Evaluate both sides, or handle a point inside the pole guard.

    ``at_pole="raise"`` refuses; ``"value"`` takes the circle mean of each
    side (exact when the singularity is removable); ``"residue"`` compares
    the circle means of ``(x - s) * side(x)`` (exact for simple poles).
    ``floor`` bounds the denominator of the relative residual from below,
    for identities whose sides can cancel to zero.
    """
    try:
        check(s)
    except (EvaluationAtPole, PoleAtOne):
        if at_pole == "raise":
            raise
        if at_pole == "value":
            lhs, rhs = _cauchy_mean(lhs_fn, s), _cauchy_mean(rhs_fn, s)
        elif at_pole == "residue":
            lhs = _cauchy_mean(lambda x: (x - s) * lhs_fn(x), s)
            rhs = _cauchy_mean(lambda x: (x - s) * rhs_fn(x), s)
        else:
            raise ValueError(f"unknown at_pole mode {at_pole!r}")
        return IdentityResult(lhs, rhs, _relative(lhs, rhs))
    lhs, rhs = lhs_fn(s), rhs_fn(s)
    return IdentityResult(complex(lhs), complex(rhs), _relative(lhs, rhs, floor))


def gamma_binomial_numeric(kappa: int, s, guard: float = POLE_GUARD, at_pole: str = "raise") -> IdentityResult:
    """Both sides of the Gamma-binomial identity at complex ``s``.

    The right side is the power-of-two form; its duplication rewrite is
    checked as well and the larger residual is reported.  Both sides vanish
    at integers ``kappa/2 <= s < kappa``, where the alternating sum cancels;
    residuals are measured against at least ``1e-4`` times the sum of the absolute
    values of its terms.
    """
    s = complex(s)

    def size(x):
        try:
            return sum(math.comb(kappa, 2 * j) * abs(gamma(0.5 + j) * gamma(0.5 + x - j))
                       for j in range(kappa // 2 + 1))
        except ValueError:
            return 0.0

    def lhs(x):
        return sum((-1) ** j * math.comb(kappa, 2 * j) * gamma(0.5 + j) * gamma(0.5 + x - j)
                   for j in range(kappa // 2 + 1))

    def rhs(x):
        return cmath.exp((kappa - 2 * x) * math.log(2)) * math.pi * gamma(1 + 2 * x - kappa) * rgamma(1 + x - kappa)

    def dup(x):
        return math.sqrt(math.pi) * gamma(0.5 + x - kappa / 2) * gamma(1 + x - kappa / 2) * rgamma(1 + x - kappa)

    def check(x):
        guard_gamma(*[0.5 + x - j for j in range(kappa // 2 + 1)], 1 + 2 * x - kappa,
                    0.5 + x - kappa / 2, 1 + x - kappa / 2, guard=guard)

    floor = 1e-4 * size(s)
    main = _guarded(lhs, rhs, s, check, at_pole, floor)
    second = _guarded(rhs, dup, s, check, at_pole, floor)
    return IdentityResult(main.lhs, main.rhs, max(main.residual, second.residual))


# ------------------------------------------------------- zeta identities

def _ct_lhs(N: int, beta: int, kappa: int, s: complex) -> complex:
    w = 1 - 2 * s - kappa
    inner = 0j
    for b in range(N):
        a = int(b % N == beta % N) + (-1) ** kappa * int(b % N == (-beta) % N)
        if a == 0:
            continue
        for c in range(N):
            inner += e_of(b * c / N) * a * zeta_plus(N, c, w)
    return gamma(w) * rgamma(1 - s - kappa) * cmath.exp(2 * s * math.log(2) + s * math.log(math.pi)) * inner


def _ct_rhs(N: int, beta: int, kappa: int, s: complex) -> complex:
    w = 2 * s + kappa
    z = zeta_plus(N, beta, w) + (-1) ** kappa * zeta_plus(N, -beta, w)
    return (cmath.exp(w * math.log(N)) * gamma(s + kappa) / ((-2j * math.pi) ** kappa * cmath.exp(s * math.log(math.pi)))
            * z)


def constant_term_zeta_check(N: int, beta: int, kappa: int, s, guard: float = POLE_GUARD,
                             at_pole: str = "raise") -> IdentityResult:
    """Both sides of the constant-term zeta identity for ``beta`` in ``Z/NZ``.

    ``Gamma(1-2s-kappa)/Gamma(1-s-kappa) 2^(2s) pi^s sum_{b,c} e(bc/N) (delta_{beta,b} + (-1)^kappa delta_{-beta,b})
    zeta_+^c(1-2s-kappa) = N^(2s+kappa) Gamma(s+kappa) / ((-2 pi i)^kappa pi^s) (zeta_+^beta + (-1)^kappa zeta_+^-beta)(2s+kappa)``.

    Points within ``guard`` of a pole of a factor are refused unless
    ``at_pole`` asks for the circle-mean evaluation; at ``N = 1``,
    ``kappa = 4``, ``s = 5/2`` the Gamma pole on the left meets a trivial
    zero of zeta and ``at_pole="value"`` recovers the finite value.
    """
    s = complex(s)

    def check(x):
        guard_gamma(1 - 2 * x - kappa, x + kappa, guard=guard)
        guard_zeta(1 - 2 * x - kappa, 2 * x + kappa, guard=guard)

    return _guarded(lambda x: _ct_lhs(N, beta, kappa, x), lambda x: _ct_rhs(N, beta, kappa, x), s, check, at_pole)


def zeta_plus_fe_check(N: int, b: int, kappa: int, s, guard: float = POLE_GUARD) -> IdentityResult:
    """``sum_c e(bc/N) zeta_+^c(1-2s-kappa) = Gamma(2s+kappa) N^(2s+kappa) / ((-2 pi i)^kappa (2 pi)^(2s)) e^(pi i s) zeta^b(2s+kappa)``.

    ``zeta^b(w) = zeta_+^b(w) + e^(-pi i w) zeta_+^(-b)(w)``.
    """
    s = complex(s)
    w = 2 * s + kappa
    guard_gamma(w, guard=guard)
    guard_zeta(w, 1 - w, guard=guard)
    lhs = sum(e_of(b * c / N) * zeta_plus(N, c, 1 - w) for c in range(N))
    rhs = (gamma(w) * cmath.exp(w * math.log(N)) / ((-2j * math.pi) ** kappa * cmath.exp(2 * s * math.log(2 * math.pi)))
           * cmath.exp(1j * math.pi * s) * zeta_signed(N, b, w))
    return IdentityResult(complex(lhs), complex(rhs), _relative(lhs, rhs))


def reflection_consequence_check(kappa: int, s, guard: float = POLE_GUARD) -> IdentityResult:
    """``Gamma(1-2s-kappa) Gamma(2s+kappa) / Gamma(1-s-kappa) = Gamma(s+kappa) / (2 cos(pi s))``."""
    s = complex(s)
    guard_gamma(1 - 2 * s - kappa, 2 * s + kappa, s + kappa, guard=guard)
    # cos(pi s) vanishes at half odd integers
    if abs(s - (math.floor(s.real) + 0.5)) < guard:
        raise EvaluationAtPole(f"cos(pi s) vanishes near s = {s}")
    lhs = gamma(1 - 2 * s - kappa) * gamma(2 * s + kappa) * rgamma(1 - s - kappa)
    rhs = gamma(s + kappa) / (2 * cmath.cos(math.pi * s))
    return IdentityResult(complex(lhs), complex(rhs), _relative(lhs, rhs))


def zeta_sign_symmetry(N: int, c: int, kappa: int) -> float:
    """Residual of ``zeta^(-c)(kappa) = (-1)^kappa zeta^c(kappa)`` for integer ``kappa >= 2``."""
    lhs = zeta_signed(N, -c, kappa)
    rhs = (-1) ** kappa * zeta_signed(N, c, kappa)
    # both sides vanish when c = -c and kappa is odd; measure against the summands
    scale = abs(zeta_plus(N, c, kappa)) + abs(zeta_plus(N, -c, kappa))
    return abs(lhs - rhs) / scale


# ----------------------------------------------------------------- suite

@dataclass
class SuiteLine:
    name: str
    cases: int
    max_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


def exact_gamma_binomial_cases(kappa_max: int = 8, extra: int = 10) -> list:
    """All ``(kappa, s)`` with ``0 <= kappa <= kappa_max`` and ``kappa <= s <= kappa + extra``."""
    return [(k, s) for k in range(kappa_max + 1) for s in range(k, k + extra + 1)]


def random_grid(rng: np.random.Generator, n: int, re=(-1.0, 3.0), im=(-2.0, 2.0)) -> np.ndarray:
    return rng.uniform(*re, n) + 1j * rng.uniform(*im, n)


def _grid_residual(fn, points, guard: float = POLE_GUARD) -> tuple:
    worst, used = 0.0, 0
    for args in points:
        try:
            r = fn(*args)
        except (EvaluationAtPole, PoleAtOne):
            continue
        worst = max(worst, r.residual)
        used += 1
    return worst, used


def run_suite(seed: int = 0, exact_only: bool = False, grid_size: int = 50) -> list:
    """Run every identity check; returns one :class:`SuiteLine` per identity."""
    lines = []
    cases = exact_gamma_binomial_cases()
    mismatches = sum(gamma_binomial_lhs_exact(k, s) != gamma_binomial_rhs_exact(k, s) for k, s in cases)
    lines.append(SuiteLine("gamma_binomial_exact", len(cases), float(mismatches), 0.0))
    if exact_only:
        return lines
    rng = np.random.default_rng(seed)
    pts = [(int(k), s) for k, s in zip(rng.integers(0, 9, grid_size), random_grid(rng, grid_size, (-2.0, 4.0)))]
    worst, used = _grid_residual(gamma_binomial_numeric, pts)
    lines.append(SuiteLine("gamma_binomial_numeric", used, worst, 1e-10))
    pts = [(int(N), int(b), int(k), s) for N, b, k, s in
           zip(rng.integers(1, 5, grid_size), rng.integers(0, 5, grid_size), rng.integers(0, 6, grid_size),
               random_grid(rng, grid_size, (0.6, 2.5)))]
    worst, used = _grid_residual(constant_term_zeta_check, pts)
    lines.append(SuiteLine("constant_term_zeta", used, worst, 1e-8))
    pts = [(int(N), int(b), int(k), s) for N, b, k, s in
           zip(rng.integers(1, 5, grid_size), rng.integers(0, 5, grid_size), rng.integers(0, 6, grid_size),
               random_grid(rng, grid_size, (0.6, 2.5)))]
    worst, used = _grid_residual(zeta_plus_fe_check, pts)
    lines.append(SuiteLine("zeta_plus_functional_equation", used, worst, 1e-8))
    pts = [(int(k), s) for k, s in zip(rng.integers(0, 6, grid_size), random_grid(rng, grid_size, (-1.0, 1.5)))]
    worst, used = _grid_residual(reflection_consequence_check, pts)
    lines.append(SuiteLine("reflection_consequence", used, worst, 1e-8))
    sym = max(zeta_sign_symmetry(N, c, k) for N in range(1, 6) for c in range(N) for k in range(2, 9))
    lines.append(SuiteLine("zeta_sign_symmetry", 5 * 7 * 3, sym, 1e-10))
    return lines
