"""Turbulence tensor, F-vector contraction and joint detection probabilities.

The collinear joint probability is

    P = sum_{n1 n2} [ sum_{n5} G_{n5} A_{n1 n2 n5}^{m, -m, 0} ] F_{n1} F_{n2},

with F_n = sum_{n'} Gamma_{N1 N2 n'} Gamma_{n' N n} and m = M - M1 - M2.
Two facts shape the evaluation:

* F_n is nonzero for every n >= N1 + N2 + N of matching parity, so the
  F index is cut at ``n_inner``.  The A contraction is then a finite sum
  and is done exactly in real space: with t = rho^2,
  P = int_0^1 g(t) phi(t)^2 dt, where phi = sum_n F_n sqrt(n+1) R_n^|m|
  and g = sum_{n5} G_{n5} sqrt(n5+1) R_{n5}^0.  Gauss-Legendre in t
  integrates this polynomial exactly.
* G does not decay in n5 at weak turbulence; it approaches its vacuum
  value G_vac = (z^2 / 16 k^2 R^2) Z_{n5}^0(0).  The vacuum part of the
  sum is known in closed form, c pi^2 Gamma_{N1 N2 N}^2 for m = 0, so
  only the excess G - G_vac is summed numerically.  This is the same
  value as the plain sum, rearranged so that truncating F costs little.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .coupling import CouplingCache, CouplingKey
from .modes import ModeIndex, ModeIndexError, as_mode
from .specfun import hyp1f1_neg_scaled, jacobi_table

__all__ = [
    "AO_MODES",
    "AoConfig",
    "ConvergenceError",
    "DetectionSpec",
    "JointResult",
    "ProbabilityGrid",
    "TurbulenceParams",
    "f_vector",
    "g_excess",
    "g_tensor",
    "g_tensor_vacuum",
    "gamma_of_rytov",
    "joint_probability",
    "joint_probability_result",
    "no_turbulence_probability",
    "probability_grid",
]

AO_MODES = ("none", "truncate", "hybrid")
DEFAULT_N_INNER = 160


class ConvergenceError(ArithmeticError):
    """Truncation tail estimate above the requested tolerance."""

    def __init__(self, message, partial, tail):
        super().__init__(message)
        self.partial = partial
        self.tail = tail


def gamma_of_rytov(sigma_R: float) -> float:
    """Turbulence strength gamma = 0.4 (sigma_R^2)^(6/5)."""
    if sigma_R < 0:
        raise ValueError("sigma_R must be non-negative")
    return 0.4 * (sigma_R * sigma_R) ** 1.2


@dataclass(frozen=True)
class TurbulenceParams:
    """Channel parameters: wave number k [1/m], distance z [m], pupil radius R [m]."""

    k: float = 1e7
    z: float = 5e3
    R: float = 5e-3
    sigma_R: float = 0.0

    def __post_init__(self):
        if not (self.k > 0 and self.z > 0 and self.R > 0):
            raise ValueError("k, z and R must be positive")
        if self.sigma_R < 0:
            raise ValueError("sigma_R must be non-negative")

    @property
    def gamma(self) -> float:
        return gamma_of_rytov(self.sigma_R)

    @property
    def x(self) -> float:
        """Argument 8 pi^2 k R^2 / (gamma z) of the hypergeometric function."""
        g = self.gamma
        return math.inf if g == 0 else 8.0 * math.pi**2 * self.k * self.R**2 / (g * self.z)

    @property
    def vacuum_scale(self) -> float:
        """z^2 / (16 k^2 R^2), the weak-turbulence limit of G / Z_{n5}^0(0)."""
        return self.z**2 / (16.0 * self.k**2 * self.R**2)


@dataclass(frozen=True)
class AoConfig:
    """Adaptive-optics model.

    ``truncate`` drops the n5 <= cutoff terms of the turbulence sum;
    ``hybrid`` replaces them by their vacuum values.
    """

    mode: str = "none"
    cutoff: int = 0

    def __post_init__(self):
        if self.mode not in AO_MODES:
            raise ValueError(f"ao mode must be one of {AO_MODES}, got {self.mode!r}")
        if self.cutoff < 0:
            raise ValueError("ao cutoff must be non-negative")


@dataclass(frozen=True)
class DetectionSpec:
    pump: ModeIndex
    det1: ModeIndex
    det2: ModeIndex

    def __post_init__(self):
        for name in ("pump", "det1", "det2"):
            object.__setattr__(self, name, as_mode(getattr(self, name)))

    @property
    def inner_m(self) -> int:
        """Azimuthal index of the F channel, M - M1 - M2."""
        return self.pump.m - self.det1.m - self.det2.m


# ---------------------------------------------------------------------------
# G tensor
# ---------------------------------------------------------------------------


def _check_n5(n5: int) -> None:
    ModeIndex(n5, 0)


def g_tensor(n5: int, params: TurbulenceParams) -> float:
    """Closed-form turbulence tensor G_{n5}^0(gamma) for gamma > 0.

    2 pi i^n5 sqrt(n5+1) (pi z / 4 gamma k) x^(n5/2) Gamma(n5/2+1) / Gamma(n5+2)
    1F1(n5/2+1; n5+2; -x), with x = 8 pi^2 k R^2 / (gamma z).  The product is
    formed in logarithms because x^(n5/2) and 1F1 separately leave the double
    range at weak turbulence.
    """
    _check_n5(n5)
    g = params.gamma
    if g == 0:
        raise ValueError("sigma_R = 0 has no closed form; use g_tensor_vacuum")
    x = params.x
    a, b = n5 / 2 + 1, n5 + 2
    kum = hyp1f1_neg_scaled(a, b, x)
    log_mag = (
        math.log(2 * math.pi * math.sqrt(n5 + 1) * math.pi * params.z / (4 * g * params.k))
        + (n5 / 2) * math.log(x)
        + math.lgamma(a)
        - math.lgamma(b)
        + kum.log_prefactor
    )
    sign = -1.0 if (n5 // 2) % 2 else 1.0
    return sign * math.exp(log_mag) * kum.scaled


def g_tensor_vacuum(n5: int, params: TurbulenceParams) -> float:
    """Vacuum limit (z^2 / 16 k^2 R^2) Z_{n5}^0(0) = c sqrt(n5+1) (-1)^(n5/2)."""
    _check_n5(n5)
    sign = -1.0 if (n5 // 2) % 2 else 1.0
    return params.vacuum_scale * sign * math.sqrt(n5 + 1)


def g_excess(n5: int, params: TurbulenceParams) -> float:
    """G - G_vac, computed without cancellation.  Zero at sigma_R = 0."""
    _check_n5(n5)
    if params.gamma == 0:
        return 0.0
    # Gamma(a) / Gamma(b - a) = 1 and x^(n5/2 - a) = 1/x, so G = G_vac * scaled
    kum = hyp1f1_neg_scaled(n5 / 2 + 1, n5 + 2, params.x)
    return g_tensor_vacuum(n5, params) * kum.scaled_minus_one


# ---------------------------------------------------------------------------
# F vector
# ---------------------------------------------------------------------------


def _inner_keys(spec: DetectionSpec, n_prime: int, n: int):
    N1, N2, P = spec.det1, spec.det2, spec.pump
    mp = N1.m + N2.m
    m = spec.inner_m
    # index bookkeeping of the collapsed formula: m1 = -m2 = M - M1 - M2, m3 = m4 = M1 + M2
    assert m == P.m - mp
    k1 = CouplingKey(N1, N2, (n_prime, mp))
    k2 = CouplingKey((n_prime, -mp), P, (n, m))
    return k1, k2


def f_vector(spec: DetectionSpec, n: int, cache: CouplingCache | None = None) -> float:
    """F_n = sum_{n'} Gamma_{N1 N2 n'}^{M1 M2, M1+M2} Gamma_{n' N n}^{-(M1+M2), M, m}.

    Gamma's radial support n' >= N1 + N2 and n >= n' + N makes the sum finite.
    """
    m = spec.inner_m
    ModeIndex(n, m)
    cache = cache if cache is not None else CouplingCache()
    lo = spec.det1.n + spec.det2.n
    terms = []
    for n_prime in range(lo, n - spec.pump.n + 1, 2):
        k1, k2 = _inner_keys(spec, n_prime, n)
        terms.append(cache.gamma(k1) * cache.gamma(k2))
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# Joint probability
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _gauss_t(nodes: int):
    x, w = np.polynomial.legendre.leggauss(nodes)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=64)
def _radial_table(nodes: int, m_abs: int, n_top: int) -> np.ndarray:
    """sqrt(n+1) R_n^m(sqrt(t)) at the nodes, rows n = m, m+2, ..., n_top."""
    t, _ = _gauss_t(nodes)
    kmax = (n_top - m_abs) // 2
    tab = jacobi_table(kmax, m_abs, 0, 1.0 - 2.0 * t)
    k = np.arange(kmax + 1)
    n = m_abs + 2 * k
    sign = np.where(k % 2, -1.0, 1.0)
    out = (sign * np.sqrt(n + 1.0))[:, None] * tab * t ** (m_abs / 2)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class JointResult:
    """Joint probability with diagnostics.

    ``value`` is the raw (unclamped) probability, ``imag`` the imaginary
    part of the Hermitian form, ``tail`` an estimate of the truncation
    error from the F-index cut and, when set, the n5 cut.
    """

    value: float
    imag: float
    tail: float
    vacuum_part: float
    n_inner: int


def joint_probability_result(
    spec: DetectionSpec,
    params: TurbulenceParams,
    ao: AoConfig = AoConfig(),
    n_inner: int = DEFAULT_N_INNER,
    n5_max: int | None = None,
    cache: CouplingCache | None = None,
    tol: float | None = None,
) -> JointResult:
    """Collinear joint detection probability with the F index cut at n_inner.

    Parameters
    ----------
    spec : DetectionSpec
        Pump and detector modes.
    params : TurbulenceParams
        Channel; sigma_R = 0 selects the vacuum branch.
    ao : AoConfig
        Adaptive-optics model applied to the n5 sum.
    n_inner : int
        Largest F index kept.  Raised automatically to at least
        N1 + N2 + N + 40.
    n5_max : int, optional
        Largest turbulence order kept in the excess sum.  By default every
        order the truncated F can reach (2 n_inner) is included.
    cache : CouplingCache, optional
        Shared Gamma table.
    tol : float, optional
        If given, raise ConvergenceError when the tail estimate exceeds
        tol times the magnitude of the result.

    Returns
    -------
    JointResult
    """
    cache = cache if cache is not None else CouplingCache()
    m = spec.inner_m
    lo = spec.det1.n + spec.det2.n + spec.pump.n
    n_inner = max(n_inner, lo + 40)
    if (n_inner - lo) % 2:
        n_inner -= 1

    # vacuum part, exact: c (sum_n F_n Z_n^m(0))^2 = c (pi Gamma_{N1 N2 N})^2 for m = 0
    if m == 0:
        g0 = cache.gamma(CouplingKey(spec.det1, spec.det2, spec.pump))
        vac = params.vacuum_scale * (math.pi * g0) ** 2
    else:
        vac = 0.0

    n5_top = 2 * n_inner if n5_max is None else min(n5_max, 2 * n_inner)
    cut = ao.cutoff if ao.mode != "none" else -1
    n5s = np.arange(0, n5_top + 1, 2)
    excess = np.array([g_excess(int(n5), params) for n5 in n5s])
    weights = np.where(n5s > cut, excess, 0.0)
    if ao.mode == "truncate":
        vac_terms = np.array([g_tensor_vacuum(int(n5), params) for n5 in n5s])
        weights = weights - np.where(n5s <= cut, vac_terms, 0.0)
    if not np.any(weights):
        return JointResult(vac, 0.0, 0.0, vac, n_inner)

    nodes = n_inner + n5_top // 4 + 16
    t, w = _gauss_t(nodes)
    ns = np.arange(lo, n_inner + 1, 2)
    F = np.array([f_vector(spec, int(n), cache) for n in ns])
    # rows of the radial table start at n = |m|
    tab = _radial_table(nodes, abs(m), n_inner)
    rows = (ns - abs(m)) // 2
    basis = tab[rows]
    g = weights @ _radial_table(nodes, 0, n5_top)[: len(n5s)]

    phi = (F.astype(complex)) @ basis
    herm = np.sum(w * g * phi * np.conj(phi))

    # tail: the same form with the top quarter of F removed
    keep = ns <= lo + 2 * ((n_inner - lo) // 2 * 3 // 4)
    phi_r = F[keep] @ basis[keep]
    reduced = float(np.sum(w * g * phi_r * phi_r))
    tail = abs(herm.real - reduced)
    if n5_max is not None and len(n5s) >= 2:
        last = weights[-2:, None] * _radial_table(nodes, 0, n5_top)[len(n5s) - 2 : len(n5s)]
        tail = max(tail, float(np.sum(np.abs(np.sum(w * last * np.abs(phi) ** 2, axis=1)))))

    value = vac + float(herm.real)
    if tol is not None and tail > tol * max(abs(value), np.finfo(float).tiny):
        raise ConvergenceError(f"tail estimate {tail:.3g} exceeds tolerance", value, tail)
    return JointResult(value, float(herm.imag), tail, vac, n_inner)


def joint_probability(
    spec: DetectionSpec,
    params: TurbulenceParams,
    ao: AoConfig = AoConfig(),
    n_inner: int = DEFAULT_N_INNER,
    n5_max: int | None = None,
    cache: CouplingCache | None = None,
    tol: float | None = None,
) -> float:
    """Raw collinear joint probability; see joint_probability_result."""
    return joint_probability_result(spec, params, ao, n_inner, n5_max, cache, tol).value


def no_turbulence_probability(spec: DetectionSpec, collinear: bool = True) -> float:
    """|Gamma_{N1 N2 N}|^2 for collinear detection, |A_{N1 N2 N}|^2 otherwise."""
    from .coupling import a_coeff, gamma_coeff

    key = CouplingKey(spec.det1, spec.det2, spec.pump)
    v = gamma_coeff(key) if collinear else a_coeff(key)
    return v * v


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


@dataclass
class ProbabilityGrid:
    """Joint probabilities over (N1, N2) at fixed detector azimuths.

    ``raw`` holds unclamped values; ``cells`` the values clamped at zero;
    ``normalized`` the cells divided by their sum (left unnormalized and
    flagged by ``all_zero`` when every cell is zero).
    """

    pump: ModeIndex
    m1: int
    m2: int
    n_max: int
    params: TurbulenceParams
    ao: AoConfig
    raw: dict = field(default_factory=dict)
    cells: dict = field(default_factory=dict)
    normalized: dict = field(default_factory=dict)
    imag: dict = field(default_factory=dict)
    tail: dict = field(default_factory=dict)
    total: float = 0.0
    all_zero: bool = False
    normalization: str = "unit sum over displayed grid after clamping negatives to 0"
    n_inner: int = DEFAULT_N_INNER
    n5_max: int | None = None

    def orders(self, m: int) -> list[int]:
        return list(range(abs(m), self.n_max + 1, 2))

    def keys(self):
        return sorted(self.cells)

    def as_array(self, which: str = "normalized") -> np.ndarray:
        """Dense (n_max+1, n_max+1) array; invalid cells are NaN."""
        src = getattr(self, which)
        out = np.full((self.n_max + 1, self.n_max + 1), np.nan)
        for (a, b), v in src.items():
            out[a, b] = v
        return out


def probability_grid(
    pump,
    m1: int,
    m2: int,
    n_max: int,
    params: TurbulenceParams,
    ao: AoConfig = AoConfig(),
    n_inner: int = DEFAULT_N_INNER,
    n5_max: int | None = None,
    cache: CouplingCache | None = None,
) -> ProbabilityGrid:
    """Fill every valid (N1, N2) cell and normalise to unit sum."""
    pump = as_mode(pump)
    if n_max < max(abs(m1), abs(m2)):
        raise ModeIndexError(f"n_max={n_max} is below the detector azimuths ({m1}, {m2})")
    cache = cache if cache is not None else CouplingCache()
    grid = ProbabilityGrid(pump, m1, m2, n_max, params, ao, n_inner=n_inner, n5_max=n5_max)
    for N1 in grid.orders(m1):
        for N2 in grid.orders(m2):
            spec = DetectionSpec(pump, (N1, m1), (N2, m2))
            r = joint_probability_result(spec, params, ao, n_inner, n5_max, cache)
            grid.raw[N1, N2] = r.value
            grid.cells[N1, N2] = max(r.value, 0.0)
            grid.imag[N1, N2] = r.imag
            grid.tail[N1, N2] = r.tail
    grid.total = math.fsum(grid.cells.values())
    if grid.total > 0:
        grid.normalized = {k: v / grid.total for k, v in grid.cells.items()}
    else:
        grid.all_zero = True
        grid.normalized = dict(grid.cells)
    return grid
