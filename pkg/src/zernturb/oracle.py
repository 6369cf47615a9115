"""Brute-force quadrature used to validate the closed-form tensors.

Nothing in here calls the closed forms it checks.  Disk integrals use
Gauss-Legendre nodes in t = rho^2 with a uniform trapezoid rule in angle,
which is exact for Zernike triple products at modest node counts.  Plane
integrals are split into half-oscillation panels, each integrated by
Gauss-Legendre, and the two last partial sums are averaged to cancel the
oscillating tail.

Running ``python3 -m zernturb.oracle DIR`` regenerates the fixture tables
consumed by the test suite.
"""

from __future__ import annotations

import argparse
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .coupling import CouplingKey, as_key
from .modes import ModeIndex, PolarPoint, enumerate_modes, fourier_zernike_eval, zernike_eval
from .specfun import bessel_j

__all__ = [
    "OracleConvergenceError",
    "OracleResult",
    "QuadratureSpec",
    "a_coeff_numeric",
    "canonical_keys",
    "completeness_residual",
    "disk_integral",
    "g_tensor_numeric",
    "gamma_coeff_numeric",
    "gamma_coeff_series",
    "read_fixture_table",
    "triple_bessel_q_numeric",
    "write_fixture_table",
]


class OracleConvergenceError(ArithmeticError):
    """Quadrature tail estimate exceeds the requested tolerance."""

    def __init__(self, message, value, error):
        super().__init__(message)
        self.value = value
        self.error = error


@dataclass(frozen=True)
class QuadratureSpec:
    """Node counts and truncation for the oracle quadratures.

    ``radial_nodes`` is the Gauss-Legendre count in t = rho^2 for disk
    integrals and the count per panel for plane integrals.
    """

    radial_nodes: int = 32
    angular_nodes: int = 64
    q_max: float = 320.0
    tail_policy: bool = True

    def __post_init__(self):
        if self.radial_nodes < 8:
            raise ValueError("radial_nodes must be at least 8")
        if self.angular_nodes < 16 or self.angular_nodes % 2:
            raise ValueError("angular_nodes must be even and at least 16")
        if not self.q_max > 0:
            raise ValueError("q_max must be positive")


@dataclass(frozen=True)
class OracleResult:
    value: float
    error: float
    imag: float = 0.0


def _gl01(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def disk_integral(f, spec: QuadratureSpec = QuadratureSpec()) -> complex:
    """Integral of f over the unit disk; ``f`` takes a PolarPoint of arrays."""
    t, wt = _gl01(spec.radial_nodes)
    theta = 2.0 * np.pi * np.arange(spec.angular_nodes) / spec.angular_nodes
    r = np.sqrt(t)[:, None]
    vals = np.asarray(f(PolarPoint(r * np.ones_like(theta), np.ones_like(r) * theta)))
    # d^2s = rho drho dtheta = (1/2) dt dtheta
    return complex(0.5 * (2.0 * np.pi / spec.angular_nodes) * np.sum(wt[:, None] * vals))


def a_coeff_numeric(key, spec: QuadratureSpec = QuadratureSpec()) -> OracleResult:
    """(1/pi) times the disk integral of Z_a Z_b conj(Z_c)."""
    key = as_key(key)

    def integrand(p):
        return zernike_eval(key.a, p) * zernike_eval(key.b, p) * np.conj(zernike_eval(key.c, p))

    val = disk_integral(integrand, spec) / math.pi
    # Doubling the nodes gives the error bound; the integrand is a polynomial
    # so the difference is at rounding level once the rule is exact.
    spec2 = QuadratureSpec(2 * spec.radial_nodes, 2 * spec.angular_nodes, spec.q_max)
    val2 = disk_integral(integrand, spec2) / math.pi
    return OracleResult(val.real, abs(val2 - val), val.imag)


# ---------------------------------------------------------------------------
# Oscillatory radial integrals
# ---------------------------------------------------------------------------


def _panel_integrals(f, edges, nodes: int) -> np.ndarray:
    """Gauss-Legendre integral of f on each interval [edges[i], edges[i+1]]."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    a = edges[:-1, None]
    h = (edges[1:] - edges[:-1])[:, None]
    pts = a + 0.5 * h * (x + 1.0)
    return np.sum(0.5 * h * w * f(pts), axis=1)


def _averaged_sum(panels: np.ndarray):
    """Partial sum at the last panel edge, averaged over the last two edges.

    Returns (estimate, change) where ``change`` compares the estimate with
    the same construction at half the range.
    """
    cs = np.cumsum(panels)

    def est(c):
        return 0.5 * (c[-1] + c[-2]) if len(c) > 1 else c[-1]

    full = est(cs)
    half = est(cs[: max(2, len(cs) // 2)])
    return float(full), float(abs(full - half))


def triple_bessel_q_numeric(i: int, j: int, k_: int, u_max: float = 4000.0, nodes: int = 16) -> OracleResult:
    """int_0^inf J_i(u) J_j(u) J_k(2u) du by panel quadrature.

    The integrand has a non-oscillating part decaying like u^-3/2; its
    leading asymptotic tail beyond u_max is added analytically.
    """
    half = np.pi / 2.0
    edges = np.arange(0.0, u_max + half / 2, half)

    def f(u):
        return bessel_j(i, u) * bessel_j(j, u) * bessel_j(k_, 2.0 * u)

    cs = np.cumsum(_panel_integrals(f, edges, nodes))
    # J_i J_j J_k(2u) ~ cos((i + j - k) pi/2 + pi/4) / (2 pi^1.5 u^1.5) on average
    amp = math.cos((i + j - k_) * math.pi / 2 + math.pi / 4) / (2.0 * math.pi**1.5)

    def corrected(c):
        u_end = edges[len(c)] - half / 2.0
        return 0.5 * (c[-1] + c[-2]) + amp * 2.0 / math.sqrt(u_end)

    full = corrected(cs)
    # the leftover tail falls off like u^-3/2, so the half-range change bounds it
    return OracleResult(full, abs(full - corrected(cs[: len(cs) // 2])))


_RADIAL_CACHE: dict = {}


def _gamma_radial_numeric(n1: int, n2: int, n3: int, spec: QuadratureSpec):
    """(1/pi) int q dq of the radial parts of Z~ Z~ conj(Z~(2q)), times 2 pi.

    The angular integral is done separately; this is the radial factor with
    the full 2 pi of a zero-net-azimuth integrand folded in.
    """
    ck = (min(n1, n2), max(n1, n2), n3, spec.radial_nodes, spec.q_max)
    if ck in _RADIAL_CACHE:
        return _RADIAL_CACHE[ck]
    # fastest factor is J(4 pi q): half-period 1/4 in q
    half = 0.25
    edges = np.arange(0.0, spec.q_max + half / 2, half)
    a, b, c = ModeIndex(n1, n1 % 2), ModeIndex(n2, n2 % 2), ModeIndex(n3, n3 % 2)

    def f(q):
        pq = PolarPoint(q, 0.0)
        p2 = PolarPoint(2.0 * q, 0.0)
        prod = fourier_zernike_eval(a, pq) * fourier_zernike_eval(b, pq) * np.conj(fourier_zernike_eval(c, p2))
        # the azimuthal factors were evaluated at phi = 0 and are 1
        return q * prod.real, q * prod.imag

    panels_re = _panel_integrals(lambda q: f(q)[0], edges, spec.radial_nodes)
    panels_im = _panel_integrals(lambda q: f(q)[1], edges, spec.radial_nodes)
    if spec.tail_policy:
        re, dre = _averaged_sum(panels_re)
        im, dim = _averaged_sum(panels_im)
    else:
        re, im = float(np.sum(panels_re)), float(np.sum(panels_im))
        dre = dim = float(abs(panels_re[-1]) + abs(panels_im[-1]))
    scale = 2.0 * math.pi / math.pi
    out = (scale * re, scale * im, scale * math.hypot(dre, dim))
    _RADIAL_CACHE[ck] = out
    return out


def gamma_coeff_numeric(key, spec: QuadratureSpec = QuadratureSpec(), tol: float | None = None) -> OracleResult:
    """Gamma from its Fourier-plane definition by radial-angular quadrature.

    The angular integral of exp(i (m1 + m2 - m3) phi) uses the trapezoid
    rule; the radial integral uses half-period panels out to ``q_max`` with
    partial-sum averaging.  The error is the change against half the range.
    """
    key = as_key(key)
    phi = 2.0 * np.pi * np.arange(spec.angular_nodes) / spec.angular_nodes
    ang = np.mean(np.exp(1j * (key.a.m + key.b.m - key.c.m) * phi))
    re, im, err = _gamma_radial_numeric(key.a.n, key.b.n, key.c.n, spec)
    val = complex(re, im) * ang
    if tol is not None and err > tol:
        raise OracleConvergenceError(f"Gamma quadrature error bound {err:.3g} exceeds {tol:.3g}", val.real, err)
    return OracleResult(val.real, err, val.imag)


def _bessel_over_power_series(order: int, scale: int, terms: int) -> list[Fraction]:
    """Power-series coefficients of J_order(scale u) / u^order in u^2."""
    out = []
    for k in range(terms):
        c = Fraction((-1) ** k * Fraction(scale, 2) ** (2 * k + order), math.factorial(k) * math.factorial(k + order))
        out.append(c)
    return out


def gamma_coeff_series(key, extra_orders: int = 0) -> OracleResult:
    """Gamma from the linearisation of Fourier-Zernike products.

    Expands Z~_{n1}(q) Z~_{n2}(q) = 4 sum_n Gamma Z~_n(2q) in powers of q
    about the origin.  Matching coefficients gives a triangular system
    solved in exact rational arithmetic, so the only error is the final
    rounding.
    """
    key = as_key(key)
    n1, n2, n3 = key.radial
    if key.c.m != key.a.m + key.b.m or n3 < n1 + n2:
        return OracleResult(0.0, 0.0)
    base = n1 + n2
    nterm = (n3 - base) // 2 + 1 + extra_orders
    # f(u) = J_{n1+1}(u) J_{n2+1}(u) / u^2  = u^base * sum_s f_s u^{2s}
    ja = _bessel_over_power_series(n1 + 1, 1, nterm)
    jb = _bessel_over_power_series(n2 + 1, 1, nterm)
    fcoef = [sum(ja[r] * jb[s - r] for r in range(s + 1)) for s in range(nterm)]
    # basis b_n(u) = J_{n+1}(2u) / (2u) = u^n * sum_s c_s u^{2s}, n = base + 2j
    basis = []
    for jdx in range(nterm):
        n = base + 2 * jdx
        ser = _bessel_over_power_series(n + 1, 2, nterm - jdx)
        basis.append([c / 2 for c in ser])
    coef = []
    for s in range(nterm):
        acc = fcoef[s]
        for jdx in range(s):
            acc -= coef[jdx] * basis[jdx][s - jdx]
        coef.append(acc / basis[s][0])
    c = coef[(n3 - base) // 2]
    # undo the normalisation: Gamma = c (pi/2) sqrt((n1+1)(n2+1)/(n+1)) i^(n1+n2-n)
    sign = -1 if ((n3 - base) // 2) % 2 else 1
    val = sign * float(c) * (math.pi / 2) * math.sqrt((n1 + 1) * (n2 + 1) / (n3 + 1))
    return OracleResult(val, 4.0 * np.finfo(float).eps * abs(val))


def g_tensor_numeric(n5: int, params, spec: QuadratureSpec = QuadratureSpec(radial_nodes=16)) -> OracleResult:
    """Turbulence tensor G_{n5}^0 by direct radial quadrature.

    G = int d^2u exp(-2 gamma k u^2 / z) Z~_{n5}^0(4 k R u / z); the angular
    integral contributes 2 pi, and the radial integral is split into
    half-periods of the Bessel factor out to where the Gaussian is below
    1e-19.
    """
    mode = ModeIndex(n5, 0)
    gamma = params.gamma
    if gamma <= 0:
        raise ValueError("the direct quadrature needs sigma_R > 0")
    alpha = 2.0 * gamma * params.k / params.z
    scale = 4.0 * params.k * params.R / params.z
    u_max = math.sqrt(44.0 / alpha)
    half = 0.5 / scale  # J(2 pi scale u) has half-period 1/(2 scale)
    edges = np.arange(0.0, u_max + half / 2, half)

    def f(u):
        z = fourier_zernike_eval(mode, PolarPoint(scale * u, 0.0))
        return u * np.exp(-alpha * u * u) * z.real

    panels = _panel_integrals(f, edges, spec.radial_nodes)
    val = 2.0 * math.pi * math.fsum(panels)
    err = 2.0 * math.pi * (abs(panels[-1]) + 1e-15 * float(np.sum(np.abs(panels))))
    return OracleResult(val, err)


def completeness_residual(s: PolarPoint, q: PolarPoint, n_max: int) -> float:
    """|sum_{n <= n_max} Z(s) conj(Z~(q)) - pi exp(-2 pi i s.q)| at one point pair."""
    if not s.r < 1:
        raise ValueError("s must lie strictly inside the unit disk")
    total = 0j
    for mode in enumerate_modes(n_max):
        total += zernike_eval(mode, s) * np.conj(fourier_zernike_eval(mode, q))
    dot = s.r * q.r * math.cos(s.theta - q.theta)
    return abs(total - math.pi * np.exp(-2j * math.pi * dot))


# ---------------------------------------------------------------------------
# Fixture tables
# ---------------------------------------------------------------------------


def write_fixture_table(path, rows, header: str = "") -> None:
    """Write rows of (key tuple, value, error bound) as a plain-text table."""
    lines = []
    if header:
        lines += [f"# {h}" for h in header.splitlines()]
    for key, value, err in rows:
        lines.append(f"{' '.join(str(int(k)) for k in key)} {float(value)!r} {float(err)!r}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_fixture_table(path) -> list[tuple[tuple[int, ...], float, float]]:
    rows = []
    for line in Path(path).read_text().splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split()
        rows.append((tuple(int(p) for p in parts[:-2]), float(parts[-2]), float(parts[-1])))
    return rows


def canonical_keys(max_order: int):
    """Keys with radial orders up to max_order, one per first-pair swap class."""
    modes = enumerate_modes(max_order)
    for a in modes:
        for b in modes:
            if (a.n, a.m) > (b.n, b.m):
                continue
            for c in modes:
                if c.m == a.m + b.m:
                    yield CouplingKey(a, b, c)


def generate_fixtures(out_dir) -> None:
    from .turbulence import TurbulenceParams

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = QuadratureSpec()

    rows = []
    for key in canonical_keys(4):
        r = gamma_coeff_numeric(key, spec)
        rows.append(((key.a.n, key.a.m, key.b.n, key.b.m, key.c.n, key.c.m), r.value, r.error))
    write_fixture_table(out / "gamma_quadrature.txt", rows,
                        "n1 m1 n2 m2 n3 m3 value error; Fourier-plane panel quadrature")

    rows = []
    for key in canonical_keys(6):
        r = a_coeff_numeric(key)
        rows.append(((key.a.n, key.a.m, key.b.n, key.b.m, key.c.n, key.c.m), r.value, r.error))
    write_fixture_table(out / "a_quadrature.txt", rows, "n1 m1 n2 m2 n3 m3 value error; disk quadrature")

    rows = []
    for i, j, k in [(0, 0, 1), (1, 1, 3), (0, 2, 3), (2, 2, 5), (1, 1, 5), (0, 0, 5)]:
        r = triple_bessel_q_numeric(i, j, k)
        rows.append(((i, j, k), r.value, r.error))
    write_fixture_table(out / "triple_bessel_q.txt", rows, "i j k value error; int J_i(u) J_j(u) J_k(2u) du")

    rows = []
    for sigma_milli in (10, 100, 500):
        params = TurbulenceParams(1e7, 5e3, 5e-3, sigma_milli / 1000)
        for n5 in range(0, 11, 2):
            r = g_tensor_numeric(n5, params)
            rows.append(((sigma_milli, n5), r.value, r.error))
    write_fixture_table(out / "g_quadrature.txt", rows,
                        "sigma_R*1000 n5 value error; k=1e7 z=5e3 R=5e-3 radial quadrature")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Regenerate oracle fixture tables.")
    parser.add_argument("out_dir", nargs="?", default="tests/fixtures")
    args = parser.parse_args(argv)
    generate_fixtures(args.out_dir)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
