"""Closed-form A and Gamma coupling tensors and the identities linking them.

A is the triple overlap of Zernike modes on the disk,

    A_{n1 n2 n3}^{m1 m2 m3} = (1/pi) int_D Z_{n1}^{m1} Z_{n2}^{m2} conj(Z_{n3}^{m3}),

and Gamma linearises products of Fourier-Zernike modes,

    Gamma_{n1 n2 n3}^{m1 m2 m3} = (1/pi) int d^2q Z~_{n1}^{m1}(q) Z~_{n2}^{m2}(q) conj(Z~_{n3}^{m3}(2q)).

Both tensors are real.  Gamma does not depend on the azimuthal indices
beyond the selection rule m3 = m1 + m2, so its radial part is cached on
(n1, n2, n3) alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .modes import ModeIndex, as_mode, enumerate_modes
from .specfun import _jacobi_at_zero_exact, cg_coefficient

__all__ = [
    "CouplingCache",
    "CouplingKey",
    "a_coeff",
    "a_selection",
    "ga_contraction",
    "gamma_coeff",
    "gamma_radial",
    "overlap_gga",
    "triple_bessel_q",
]


@dataclass(frozen=True)
class CouplingKey:
    """Ordered triple of modes ((n1, m1), (n2, m2), (n3, m3)).

    Plain ``(n, m)`` tuples are accepted and converted to ModeIndex.
    """

    a: ModeIndex
    b: ModeIndex
    c: ModeIndex

    def __post_init__(self):
        for name in ("a", "b", "c"):
            object.__setattr__(self, name, as_mode(getattr(self, name)))

    @property
    def radial(self) -> tuple[int, int, int]:
        return self.a.n, self.b.n, self.c.n

    def swapped(self) -> "CouplingKey":
        return CouplingKey(self.b, self.a, self.c)

    def canonical(self) -> "CouplingKey":
        """Representative under exchange of the first two modes."""
        return self if (self.a.n, self.a.m) <= (self.b.n, self.b.m) else self.swapped()


def as_key(key) -> CouplingKey:
    if isinstance(key, CouplingKey):
        return key
    return CouplingKey(*key)


def a_selection(key) -> bool:
    """True when A can be nonzero: azimuthal sum rule, triangle rule, even parity."""
    key = as_key(key)
    n1, n2, n3 = key.radial
    if key.a.m + key.b.m != key.c.m:
        return False
    if not (abs(n1 - n2) <= n3 <= n1 + n2):
        return False
    return (n1 + n2 + n3) % 2 == 0


def a_coeff(key) -> float:
    """A tensor from the squared Clebsch-Gordan coefficient.

    A = sqrt((n1+1)(n2+1)/(n3+1)) |C^{n3/2, m3/2}_{n1/2, m1/2; n2/2, m2/2}|^2.
    """
    # evaluated on the canonical key so the first-pair swap symmetry is exact
    key = as_key(key).canonical()
    if not a_selection(key):
        return 0.0
    n1, n2, n3 = key.radial
    cg = cg_coefficient(n1 / 2, key.a.m / 2, n2 / 2, key.b.m / 2, n3 / 2, key.c.m / 2)
    return math.sqrt((n1 + 1) * (n2 + 1) / (n3 + 1)) * cg * cg


@lru_cache(maxsize=None)
def _q_exact(i: int, j: int, n: int) -> Fraction:
    k = (n - i - j) // 2
    ratio = Fraction(
        math.factorial((n + i + j) // 2) * math.factorial(k),
        math.factorial((n - i + j) // 2) * math.factorial((n + i - j) // 2),
    )
    return ratio / (1 << (i + j + 1)) * _jacobi_at_zero_exact(k, i, j) * _jacobi_at_zero_exact(k, j, i)


def triple_bessel_q(i: int, j: int, k_: int) -> float:
    """Triple Bessel integral Q_{ij}^{k_}(1,1,2) = int_0^inf J_i(u) J_j(u) J_{k_}(2u) du.

    Closed form in factorials and Jacobi polynomials at zero, with n = k_ - 1.
    It vanishes for n < i + j and requires n - i - j even otherwise.
    """
    if i < 0 or j < 0 or k_ < 1:
        raise ValueError("need i, j >= 0 and k_ >= 1")
    n = k_ - 1
    if n < i + j:
        return 0.0
    if (n - i - j) % 2:
        raise ValueError(f"closed form needs n - i - j even, got i={i}, j={j}, n={n}")
    return float(_q_exact(i, j, n))


@lru_cache(maxsize=None)
def gamma_radial(n1: int, n2: int, n: int) -> float:
    """Azimuth-independent part of Gamma_{n1 n2 n}.

    (pi/2) (-1)^((n1+n2-n)/2) sqrt((n+1)/((n1+1)(n2+1))) times the sum
    Q_{n1,n2} + Q_{n1+2,n2} + Q_{n1,n2+2} + Q_{n1+2,n2+2}, all at order n+1.
    Zero when n < n1 + n2 or the parity is odd.
    """
    if n < n1 + n2 or (n - n1 - n2) % 2:
        return 0.0
    qsum = _q_exact(n1, n2, n)
    if n >= n1 + n2 + 2:
        qsum += _q_exact(n1 + 2, n2, n) + _q_exact(n1, n2 + 2, n)
    if n >= n1 + n2 + 4:
        qsum += _q_exact(n1 + 2, n2 + 2, n)
    sign = -1.0 if ((n - n1 - n2) // 2) % 2 else 1.0
    return sign * (math.pi / 2) * math.sqrt((n + 1) / ((n1 + 1) * (n2 + 1))) * float(qsum)


def gamma_coeff(key) -> float:
    """Gamma tensor entry from the triple-Bessel closed form; real-valued."""
    key = as_key(key)
    if key.c.m != key.a.m + key.b.m:
        return 0.0
    return gamma_radial(*key.radial)


@dataclass
class CouplingCache:
    """Memo table for A and Gamma keyed on the first-pair-swap canonical key.

    ``perturb`` maps keys to multiplicative factors applied to Gamma; it is
    a sensitivity hook used by the verification suite.
    """

    max_order: int | None = None
    perturb: dict = field(default_factory=dict)
    _a: dict = field(default_factory=dict, repr=False)
    _g: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.perturb = {as_key(k).canonical(): float(v) for k, v in self.perturb.items()}

    def a(self, key) -> float:
        ck = as_key(key).canonical()
        val = self._a.get(ck)
        if val is None:
            val = self._a[ck] = a_coeff(ck)
        return val

    def gamma(self, key) -> float:
        ck = as_key(key).canonical()
        val = self._g.get(ck)
        if val is None:
            val = gamma_coeff(ck) * self.perturb.get(ck, 1.0)
            self._g[ck] = val
        return val

    def build(self, max_order: int | None = None) -> "CouplingCache":
        """Fill both tables for every key with radial orders up to max_order."""
        if max_order is not None:
            self.max_order = max_order
        if self.max_order is None:
            raise ValueError("no max_order configured")
        modes = enumerate_modes(self.max_order)
        for i, ma in enumerate(modes):
            for mb in modes[i:]:
                for mc in modes:
                    if mc.m == ma.m + mb.m:
                        key = CouplingKey(ma, mb, mc)
                        self.a(key)
                        self.gamma(key)
        return self


def _lookup(cache):
    if cache is None:
        return a_coeff, gamma_coeff
    return cache.a, cache.gamma


def ga_contraction(N, N1, cache: CouplingCache | None = None) -> float:
    """Sum over (n1, m1, n2, m2) of conj(Gamma_{n1 n2 N}) A_{n1 n2 N1}.

    Gamma vanishes unless n1 + n2 <= N, so the sum is finite and exact.
    The expected value is (pi/4) when N == N1 and 0 otherwise.
    """
    N, N1 = as_mode(N), as_mode(N1)
    a_fn, g_fn = _lookup(cache)
    terms = []
    for n1 in range(N.n + 1):
        for n2 in range(N.n - n1 + 1):
            for m1 in range(-n1, n1 + 1, 2):
                for m2 in range(-n2, n2 + 1, 2):
                    g = g_fn(CouplingKey((n1, m1), (n2, m2), N))
                    if g == 0.0:
                        continue
                    terms.append(g * a_fn(CouplingKey((n1, m1), (n2, m2), N1)))
    return math.fsum(terms)


def overlap_gga(n1, n2, N, cache: CouplingCache | None = None, extra_orders: int = 8) -> float:
    """Triple contraction 8 sum Gamma_{n1 n2 n} conj(Gamma_{n' n'' n}) A_{n' n'' N}.

    The intermediate order n is unbounded in principle; the inner
    contraction over (n', n'') vanishes unless n == N, so n is summed from
    n1 + n2 up to max(N, n1 + n2) + extra_orders.  By the Gamma-A
    orthogonality the result equals 8 (pi/4) Gamma_{n1 n2 N} = 2 pi Gamma.
    """
    n1, n2, N = as_mode(n1), as_mode(n2), as_mode(N)
    a_fn, g_fn = _lookup(cache)
    m = n1.m + n2.m
    terms = []
    top = max(N.n, n1.n + n2.n) + extra_orders
    for n in range(n1.n + n2.n, top + 1, 2):
        if abs(m) > n:
            continue
        outer = g_fn(CouplingKey(n1, n2, (n, m)))
        if outer == 0.0:
            continue
        inner = []
        for p in range(n + 1):
            for pp in range(n - p + 1):
                for mp in range(-p, p + 1, 2):
                    mpp = m - mp
                    if abs(mpp) > pp or (pp - abs(mpp)) % 2:
                        continue
                    g = g_fn(CouplingKey((p, mp), (pp, mpp), (n, m)))
                    if g == 0.0:
                        continue
                    inner.append(g * a_fn(CouplingKey((p, mp), (pp, mpp), N)))
        terms.append(outer * math.fsum(inner))
    return 8.0 * math.fsum(terms)
