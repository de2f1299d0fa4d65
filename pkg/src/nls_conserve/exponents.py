"""Exact exponent bookkeeping for the power-law NLS well-posedness theory.

Everything here is rational arithmetic on :class:`fractions.Fraction`, plus a
single extended value :data:`INF`.  No floating point is used anywhere.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass
from fractions import Fraction
from typing import Union


class ExponentError(ValueError):
    """An exponent lies outside the range where a relation is defined."""


@functools.total_ordering
class _PlusInfinity:
    """The exponent +infinity; larger than every finite rational."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        return False

    def __gt__(self, other):
        return other is not self

    def __hash__(self):
        return hash("nls_conserve.INF")

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __reduce__(self):
        return (_PlusInfinity, ())


INF = _PlusInfinity()

Rational = Fraction
Exponent = Union[Fraction, _PlusInfinity]


def as_exponent(value) -> Exponent:
    """Coerce ints, Fractions, ``"a/b"`` strings and ``"inf"`` to an exponent.

    Floats are refused: exactness is the point of this module.
    """
    if value is INF:
        return INF
    if isinstance(value, bool):
        raise TypeError("booleans are not exponents")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("inf", "+inf", "infinity", "oo"):
            return INF
        return Fraction(text)
    raise TypeError(f"cannot use {type(value).__name__} as an exact exponent")


def reciprocal(x: Exponent) -> Exponent:
    """1/x with 1/INF = 0 and 1/0 = INF."""
    if x is INF:
        return Fraction(0)
    if x == 0:
        return INF
    return 1 / x


def render(x: Exponent | None) -> str | None:
    """``"num/den"`` (or ``"num"``) for rationals, ``"inf"`` for INF."""
    if x is None:
        return None
    return str(x)


@dataclass(frozen=True)
class AdmissiblePair:
    q: Exponent  # time exponent
    r: Exponent  # space exponent
    n: int

    def __post_init__(self):
        if not is_admissible(self.q, self.r, self.n):
            raise ExponentError(f"({self.q}, {self.r}) is not admissible in dimension {self.n}")


CRITICALITY_CLASSES = (
    "mass-subcritical",
    "pseudo-conformal-critical",
    "intermediate",
    "energy-critical",
    "energy-supercritical",
)


@dataclass(frozen=True)
class CriticalityReport:
    n: int
    p: Fraction
    beta: Fraction
    cls: str


def _check_dim(n: int) -> None:
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ExponentError(f"dimension must be a positive integer, got {n!r}")


def dual_exponent(p) -> Exponent:
    """Hölder dual: 1/p + 1/p' = 1 on [1, INF]."""
    p = as_exponent(p)
    if p < 1:
        raise ExponentError(f"dual exponent undefined for p = {p} < 1")
    return reciprocal(1 - reciprocal(p))


def is_admissible(q, r, n: int) -> bool:
    q, r = as_exponent(q), as_exponent(r)
    _check_dim(n)
    if q < 1 or r < 1:
        return False
    if q < 2:
        return False
    if q == 2 and r is INF:
        return False
    return 2 * reciprocal(q) + n * reciprocal(r) == Fraction(n, 2)


def alpha(n: int) -> Exponent:
    """H^1-subcritical threshold: 1 + 4/(n-2) for n >= 3, INF for n = 1, 2."""
    _check_dim(n)
    if n <= 2:
        return INF
    return 1 + Fraction(4, n - 2)


def cazenave_weissler_pair(n: int, p, s, wide_s_range: bool = False) -> AdmissiblePair:
    """The pair (gamma, rho) used for H^s mild solutions.

    rho = n(p+1)/(n + s(p-1)), gamma = 4(p+1)/((p-1)(n-2s)).

    By default s must satisfy 1/2 <= s < min(1, n/2); ``wide_s_range`` relaxes
    the lower end to 0 < s.  p must satisfy 1 < p <= 1 + 4/(n-2s).
    """
    _check_dim(n)
    p, s = as_exponent(p), as_exponent(s)
    if p is INF or s is INF:
        raise ExponentError("p and s must be finite")
    upper = min(Fraction(1), Fraction(n, 2))
    lower_ok = s > 0 if wide_s_range else s >= Fraction(1, 2)
    if not (lower_ok and s < upper):
        lo = "0 <" if wide_s_range else "1/2 <="
        raise ExponentError(f"s = {s} outside {lo} s < {upper}")
    if p <= 1:
        raise ExponentError(f"p = {p} must exceed 1")
    # the endpoint p = 1 + 4/(n-2s) (gamma = p + 1) still yields an admissible
    # pair and is accepted; only the range beyond it is refused
    if p > 1 + Fraction(4) / (n - 2 * s):
        raise ExponentError(f"p = {p} > 1 + 4/(n - 2s) = {1 + Fraction(4) / (n - 2 * s)}")
    rho = n * (p + 1) / (n + s * (p - 1))
    gamma = 4 * (p + 1) / ((p - 1) * (n - 2 * s))
    return AdmissiblePair(q=gamma, r=rho, n=n)


def coefficient_exponent(n: int, p) -> Fraction:
    """beta = (n(p-1) - 4)/2, the power of t in the transformed equation."""
    _check_dim(n)
    p = as_exponent(p)
    if p is INF:
        raise ExponentError("p must be finite")
    return (n * (p - 1) - 4) / 2


def classify_criticality(n: int, p) -> CriticalityReport:
    _check_dim(n)
    p = as_exponent(p)
    if p is INF or p <= 1:
        raise ExponentError(f"p = {p} must satisfy 1 < p < inf")
    beta = coefficient_exponent(n, p)
    a = alpha(n)
    if beta < 0:
        cls = "mass-subcritical"
    elif beta == 0:
        cls = "pseudo-conformal-critical"
    elif p < a:
        cls = "intermediate"
    elif p == a:
        cls = "energy-critical"
    else:
        cls = "energy-supercritical"
    return CriticalityReport(n=n, p=p, beta=beta, cls=cls)


def proof_pair(n: int, p) -> AdmissiblePair:
    """(q, r) = (4(p+1)/(n(p-1)), p+1), valid for 1 < p < alpha(n)."""
    _check_dim(n)
    p = as_exponent(p)
    if p is INF or not (1 < p < alpha(n)):
        raise ExponentError(f"p = {p} outside 1 < p < alpha({n}) = {alpha(n)}")
    return AdmissiblePair(q=4 * (p + 1) / (n * (p - 1)), r=p + 1, n=n)


def exponent_report(n: int, p, s=Fraction(1, 2), wide_s_range: bool = False) -> dict:
    """JSON-ready summary; entries whose preconditions fail are ``None``."""
    p = as_exponent(p)
    s = as_exponent(s)
    crit = classify_criticality(n, p)
    try:
        cw = cazenave_weissler_pair(n, p, s, wide_s_range=wide_s_range)
        gamma, rho = cw.q, cw.r
    except ExponentError:
        gamma = rho = None
    try:
        pp = proof_pair(n, p)
        q, r = pp.q, pp.r
    except ExponentError:
        q = r = None
    return {
        "n": n,
        "p": render(p),
        "s": render(s),
        "gamma": render(gamma),
        "rho": render(rho),
        "q": render(q),
        "r": render(r),
        "alpha": render(alpha(n)),
        "beta": render(crit.beta),
        "class": crit.cls,
    }
