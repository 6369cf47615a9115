"""Special-function kernels used by the Zernike coupling and turbulence code.

Everything here works on real arguments in double precision.  The
hypergeometric routine is the only one with real branching logic: the
Kummer function 1F1(a; b; -x) is needed deep in its asymptotic regime
(x of order 1e3 to 1e10), where the textbook power series cancels
catastrophically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy import special as _sp

__all__ = [
    "AngularMomentumTriple",
    "Hyp1f1OverflowError",
    "KummerScaled",
    "bessel_j",
    "cg_coefficient",
    "clebsch_gordan",
    "hyp1f1_neg",
    "hyp1f1_neg_asymptotic",
    "hyp1f1_neg_scaled",
    "hyp1f1_neg_series",
    "jacobi",
    "jacobi_at_zero",
    "jacobi_table",
    "log_factorial",
]


class Hyp1f1OverflowError(ArithmeticError):
    """Raised when 1F1 cannot be evaluated to full accuracy."""


def log_factorial(n: int) -> float:
    if n < 0:
        raise ValueError(f"factorial of negative number {n}")
    return math.lgamma(n + 1.0)


def bessel_j(order, x):
    """Bessel function of the first kind, J_order(x), for integer order >= 0.

    Accepts scalars or arrays for ``x``.
    """
    if np.any(np.asarray(order) < 0):
        raise ValueError("order must be non-negative")
    out = _sp.jv(order, x)
    return float(out) if np.ndim(out) == 0 else out


@lru_cache(maxsize=None)
def _jacobi_at_zero_exact(k: int, alpha: int, beta: int) -> Fraction:
    # P_k^(a,b)(0) = 2^-k sum_s (-1)^s C(k+a, k-s) C(k+b, s)
    acc = 0
    for s in range(k + 1):
        term = math.comb(k + alpha, k - s) * math.comb(k + beta, s)
        acc += -term if s & 1 else term
    return Fraction(acc, 1 << k)


def jacobi_at_zero(k: int, alpha: int, beta: int) -> float:
    """Exact value of the Jacobi polynomial P_k^(alpha, beta) at x = 0.

    The value is accumulated in integer arithmetic and rounded once.
    """
    if k < 0 or alpha < 0 or beta < 0:
        raise ValueError("k, alpha and beta must be non-negative")
    return float(_jacobi_at_zero_exact(int(k), int(alpha), int(beta)))


def jacobi(k: int, alpha: float, beta: float, x):
    """Jacobi polynomial P_k^(alpha, beta)(x) by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p_prev = np.ones_like(x)
    if k == 0:
        return p_prev
    ab = alpha + beta
    p = (alpha + 1.0) + 0.5 * (ab + 2.0) * (x - 1.0)
    for n in range(1, k):
        c = 2 * n + ab
        a1 = 2.0 * (n + 1) * (n + ab + 1) * c
        a2 = (c + 1) * (alpha * alpha - beta * beta)
        a3 = c * (c + 1) * (c + 2)
        a4 = 2.0 * (n + alpha) * (n + beta) * (c + 2)
        p_prev, p = p, ((a2 + a3 * x) * p - a4 * p_prev) / a1
    return p


def jacobi_table(kmax: int, alpha: float, beta: float, x) -> np.ndarray:
    """Rows P_0 .. P_kmax of P_k^(alpha, beta)(x), shape (kmax + 1, len(x))."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((kmax + 1, x.size))
    out[0] = 1.0
    if kmax == 0:
        return out
    ab = alpha + beta
    out[1] = (alpha + 1.0) + 0.5 * (ab + 2.0) * (x - 1.0)
    for n in range(1, kmax):
        c = 2 * n + ab
        a1 = 2.0 * (n + 1) * (n + ab + 1) * c
        a2 = (c + 1) * (alpha * alpha - beta * beta)
        a3 = c * (c + 1) * (c + 2)
        a4 = 2.0 * (n + alpha) * (n + beta) * (c + 2)
        out[n + 1] = ((a2 + a3 * x) * out[n] - a4 * out[n - 1]) / a1
    return out


# ---------------------------------------------------------------------------
# Confluent hypergeometric 1F1(a; b; -x)
# ---------------------------------------------------------------------------

_EPS = np.finfo(float).eps
_SERIES_TERM_LIMIT = 50_000_000
_RESCALE = 1e250
_LOG_RESCALE = math.log(_RESCALE)


class KummerScaled(NamedTuple):
    """1F1(a; b; -x) split as exp(log_prefactor) * scaled.

    ``log_prefactor`` is log(Gamma(b) / Gamma(b - a) * x**-a), the leading
    large-x behaviour, so ``scaled`` tends to 1 as x grows.
    ``scaled_minus_one`` is evaluated without cancellation on the
    asymptotic branch.
    """

    scaled: float
    scaled_minus_one: float
    log_prefactor: float
    branch: str


def _log_series(a: float, b: float, x: float) -> float:
    """log 1F1(a; b; -x) via Kummer's transformation e^-x 1F1(b-a; b; x).

    All terms of the transformed series are positive, so there is no
    cancellation; only overflow needs managing.
    """
    c = b - a
    term = 1.0
    total = 1.0
    log_scale = 0.0
    s = 0
    while True:
        term *= (c + s) / (b + s) * x / (s + 1)
        s += 1
        total += term
        if s > x and term < total * 1e-17:
            break
        if total > _RESCALE:
            total /= _RESCALE
            term /= _RESCALE
            log_scale += _LOG_RESCALE
        if s > _SERIES_TERM_LIMIT:
            raise Hyp1f1OverflowError(
                f"1F1({a}; {b}; -{x}) series did not converge in {s} terms"
            )
    return math.log(total) + log_scale - x


def _asymptotic(a: float, b: float, x: float):
    """Sum of (a)_s (a-b+1)_s / (s! x^s) for s >= 1, plus an error estimate.

    Terminates exactly when a - b + 1 is a non-positive integer; otherwise
    stops at the smallest term.
    """
    c = a - b + 1.0
    term = 1.0
    tail = []
    prev = math.inf
    err = 0.0
    s = 0
    while True:
        factor = (a + s) * (c + s) / ((s + 1) * x)
        if factor == 0.0:
            break
        nxt = term * factor
        if abs(nxt) >= prev and s > 0:
            err = abs(term)
            tail.pop()
            break
        term = nxt
        s += 1
        tail.append(term)
        prev = abs(term)
        if abs(term) < 1e-18 * (1.0 + abs(math.fsum(tail[-4:]))) and s > 2:
            break
        if s > 10_000:
            err = abs(term)
            break
    biggest = max((abs(t) for t in tail), default=0.0)
    err += 4.0 * _EPS * biggest * max(1, len(tail)) ** 0.5
    return math.fsum(tail), err


def hyp1f1_neg_series(a: float, b: float, x: float) -> float:
    """1F1(a; b; -x) from the Kummer-transformed series alone."""
    if not (b > a > 0) or x < 0:
        raise ValueError("need b > a > 0 and x >= 0")
    return math.exp(_log_series(a, b, x))


def hyp1f1_neg_asymptotic(a: float, b: float, x: float) -> float:
    """1F1(a; b; -x) from the large-x algebraic expansion alone.

    Raises Hyp1f1OverflowError when the expansion cannot reach 1e-14
    relative accuracy at this x.
    """
    if not (b > a > 0) or x <= 0:
        raise ValueError("need b > a > 0 and x > 0")
    tail, err = _asymptotic(a, b, x)
    if err > 1e-14 * abs(1.0 + tail):
        raise Hyp1f1OverflowError(f"asymptotic expansion inaccurate at x={x} (error {err:.2g})")
    return math.exp(math.lgamma(b) - math.lgamma(b - a) - a * math.log(x)) * (1.0 + tail)


def hyp1f1_neg_scaled(a: float, b: float, x: float) -> KummerScaled:
    """Evaluate 1F1(a; b; -x) in the factored form described by KummerScaled.

    Requires b > a > 0 and x > 0.
    """
    if not (b > a > 0):
        raise ValueError(f"need b > a > 0, got a={a}, b={b}")
    if x <= 0:
        raise ValueError("scaled form needs x > 0")
    log_pref = math.lgamma(b) - math.lgamma(b - a) - a * math.log(x)

    # Recessive e^-x contribution must be invisible next to x^-a.
    if x - a * math.log(x) - math.lgamma(b) + math.lgamma(b - a) > 45.0:
        tail, err = _asymptotic(a, b, x)
        scaled = 1.0 + tail
        if err <= 1e-14 * abs(scaled):
            return KummerScaled(scaled, tail, log_pref, "asymptotic")

    log_val = _log_series(a, b, x)
    scaled = math.exp(log_val - log_pref)
    return KummerScaled(scaled, scaled - 1.0, log_pref, "series")


def hyp1f1_neg(a: float, b: float, x: float) -> float:
    """Confluent hypergeometric function 1F1(a; b; -x) for b > a > 0, x >= 0.

    Small and moderate x use the positive-term Kummer-transformed series;
    large x uses the algebraic asymptotic expansion (which terminates when
    a - b + 1 is a non-positive integer, as in the turbulence tensor).
    Results below the double-precision range underflow to 0.
    """
    if x < 0:
        raise ValueError("x must be non-negative (the routine computes 1F1(a; b; -x))")
    if x == 0:
        if not (b > a > 0):
            raise ValueError(f"need b > a > 0, got a={a}, b={b}")
        return 1.0
    r = hyp1f1_neg_scaled(a, b, x)
    if r.log_prefactor < -745.0:
        return math.exp(r.log_prefactor + math.log(abs(r.scaled))) * math.copysign(1.0, r.scaled)
    return math.exp(r.log_prefactor) * r.scaled


# ---------------------------------------------------------------------------
# Clebsch-Gordan coefficients
# ---------------------------------------------------------------------------


def _twice(v) -> int:
    t = 2 * Fraction(v).limit_denominator(4)
    if t.denominator != 1:
        raise ValueError(f"{v!r} is not an integer or half-integer")
    return int(t)


@dataclass(frozen=True)
class AngularMomentumTriple:
    """Arguments of C^{j3 m3}_{j1 m1 j2 m2}; integers or half-integers."""

    j1: float
    m1: float
    j2: float
    m2: float
    j3: float
    m3: float

    def __post_init__(self):
        for j, m in ((self.j1, self.m1), (self.j2, self.m2), (self.j3, self.m3)):
            tj, tm = _twice(j), _twice(m)
            if tj < 0:
                raise ValueError(f"negative angular momentum {j}")
            if abs(tm) > tj or (tj - tm) % 2:
                raise ValueError(f"invalid projection m={m} for j={j}")


def cg_coefficient(j1, m1, j2, m2, j3, m3) -> float:
    """Clebsch-Gordan coefficient <j1 m1; j2 m2 | j3 m3> (Condon-Shortley phase).

    Racah's single-sum formula with log-factorial terms; the alternating sum
    is accumulated with its signs tracked explicitly.
    """
    tj1, tm1, tj2, tm2, tj3, tm3 = map(_twice, (j1, m1, j2, m2, j3, m3))
    if tm1 + tm2 != tm3:
        return 0.0
    if tj3 > tj1 + tj2 or tj3 < abs(tj1 - tj2) or (tj1 + tj2 + tj3) % 2:
        return 0.0
    if abs(tm1) > tj1 or abs(tm2) > tj2 or abs(tm3) > tj3:
        return 0.0
    # all of these are integers once the checks above pass
    a = (tj1 + tj2 - tj3) // 2
    b = (tj1 - tm1) // 2
    c = (tj2 + tm2) // 2
    d = (tj3 - tj2 + tm1) // 2
    e = (tj3 - tj1 - tm2) // 2
    kmin = max(0, -d, -e)
    kmax = min(a, b, c)
    if kmin > kmax:
        return 0.0
    lf = log_factorial
    log_norm = 0.5 * (
        math.log(tj3 + 1)
        + lf(a)
        + lf((tj1 - tj2 + tj3) // 2)
        + lf((-tj1 + tj2 + tj3) // 2)
        - lf((tj1 + tj2 + tj3) // 2 + 1)
        + lf((tj1 + tm1) // 2)
        + lf(b)
        + lf(c)
        + lf((tj2 - tm2) // 2)
        + lf((tj3 + tm3) // 2)
        + lf((tj3 - tm3) // 2)
    )
    logs = []
    signs = []
    for k in range(kmin, kmax + 1):
        logs.append(-(lf(k) + lf(a - k) + lf(b - k) + lf(c - k) + lf(d + k) + lf(e + k)))
        signs.append(-1.0 if k & 1 else 1.0)
    top = max(logs)
    total = math.fsum(s * math.exp(l - top) for s, l in zip(signs, logs))
    return total * math.exp(top + log_norm)


def clebsch_gordan(t: AngularMomentumTriple) -> float:
    """C^{j3 m3}_{j1 m1 j2 m2}; exactly 0 off the selection rules."""
    return cg_coefficient(t.j1, t.m1, t.j2, t.m2, t.j3, t.m3)
