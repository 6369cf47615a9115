"""One pass/fail test per acceptance criterion, at its stated tolerance and time budget."""

import math
import time
from collections import defaultdict

from zernturb import oracle
from zernturb.coupling import CouplingCache, CouplingKey, ga_contraction, gamma_coeff
from zernturb.modes import enumerate_modes
from zernturb.turbulence import (
    AoConfig,
    TurbulenceParams,
    g_tensor,
    g_tensor_vacuum,
    probability_grid,
)

PUMP = (2, 0)
M1, M2 = 1, -1
N_MAX = 9
FLOOR = 10**-4.5

# every grid built here is kept for the symmetry and reality criterion
GRIDS = {}


def fig1_grid(sigma, ao=AoConfig(), cache=None, fresh=False):
    key = (sigma, ao)
    if fresh or key not in GRIDS:
        GRIDS[key] = probability_grid(PUMP, M1, M2, N_MAX, TurbulenceParams(sigma_R=sigma), ao,
                                      cache=cache)
    return GRIDS[key]


def off_peak_weight(grid):
    return math.fsum(v for k, v in grid.normalized.items() if k != (1, 1))


def test_ac1_selection_rule_single_cell():
    t0 = time.perf_counter()
    grid = fig1_grid(0.0, cache=CouplingCache())
    elapsed = time.perf_counter() - t0
    nonzero = [k for k, v in grid.raw.items() if abs(v) >= 1e-12]
    assert nonzero == [(1, 1)]
    assert grid.raw[1, 1] > 1e-12
    assert elapsed < 1.0


def test_ac2_a_tensor_closed_form_vs_quadrature():
    t0 = time.perf_counter()
    cache = CouplingCache()
    spec = oracle.QuadratureSpec()
    worst, count = 0.0, 0
    for key in oracle.canonical_keys(6):
        worst = max(worst, abs(cache.a(key) - oracle.a_coeff_numeric(key, spec).value))
        count += 1
    elapsed = time.perf_counter() - t0
    assert count > 500
    assert worst < 1e-10
    assert elapsed < 30.0


def test_ac3_gamma_tensor_closed_form_vs_quadrature():
    t0 = time.perf_counter()
    spec = oracle.QuadratureSpec()
    bad = []
    for key in oracle.canonical_keys(4):
        closed = gamma_coeff(key)
        quad = oracle.gamma_coeff_numeric(key, spec).value
        err = abs(closed - quad)
        if not (err < 1e-6 or err < 1e-4 * abs(closed)):
            bad.append((key, closed, quad))
    elapsed = time.perf_counter() - t0
    assert bad == []
    assert elapsed < 120.0


def test_ac4_gamma_a_orthogonality():
    t0 = time.perf_counter()
    cache = CouplingCache()
    modes = enumerate_modes(6)
    worst = 0.0
    for N in modes:
        for N1 in modes:
            expected = math.pi / 4 if N == N1 else 0.0
            worst = max(worst, abs(ga_contraction(N, N1, cache) - expected))
    elapsed = time.perf_counter() - t0
    assert worst < 1e-10
    assert elapsed < 10.0


def test_ac5_g_tensor_closed_form_vs_quadrature():
    t0 = time.perf_counter()
    worst = 0.0
    for sigma in (0.01, 0.1, 0.5):
        params = TurbulenceParams(k=1e7, z=5e3, R=5e-3, sigma_R=sigma)
        for n5 in range(0, 11, 2):
            ref = oracle.g_tensor_numeric(n5, params).value
            worst = max(worst, abs(g_tensor(n5, params) / ref - 1.0))
    elapsed = time.perf_counter() - t0
    assert worst < 1e-6
    assert elapsed < 10.0


def test_ac6_vacuum_limit_consistency():
    t0 = time.perf_counter()
    grid = fig1_grid(0.0)
    ref = {k: gamma_coeff(CouplingKey((k[0], M1), (k[1], M2), PUMP)) ** 2 for k in grid.cells}
    total = math.fsum(ref.values())
    worst = max(abs(grid.normalized[k] - ref[k] / total) for k in ref)
    params = TurbulenceParams(sigma_R=1e-4)
    ratios = [g_tensor(n, params) / g_tensor_vacuum(n, params) for n in (0, 2, 4)]
    elapsed = time.perf_counter() - t0
    assert worst < 1e-10
    assert max(ratios) - min(ratios) < 1e-3
    assert elapsed < 5.0


def test_ac7_turbulence_crosstalk_structure():
    t0 = time.perf_counter()
    grid = fig1_grid(0.1)
    elapsed = time.perf_counter() - t0
    off_peak = {k: v for k, v in grid.normalized.items() if k != (1, 1)}
    above_floor = [k for k, v in off_peak.items() if v > FLOOR]
    shells = defaultdict(float)
    for (a, b), v in grid.normalized.items():
        if a + b > 2:
            shells[a + b] += v
    occupied = [s for s in sorted(shells) if shells[s] > 0]
    # the decrease is required for the shells after the first occupied one
    weights = [shells[s] for s in occupied[1:]]
    monotone = all(x > y for x, y in zip(weights, weights[1:]))
    report = (
        f"largest off-peak cell {max(off_peak.values()):.3g} vs floor {FLOOR:.3g}; "
        f"shell weights { {s: float(f'{shells[s]:.3g}') for s in occupied} }"
    )
    assert elapsed < 30.0
    assert above_floor and monotone, report


def test_ac8_ao_suppression():
    t0 = time.perf_counter()
    cache = CouplingCache()
    none = fig1_grid(0.1, AoConfig(), cache, fresh=True)
    truncate = fig1_grid(0.1, AoConfig("truncate", 6), cache, fresh=True)
    strong = fig1_grid(0.5, AoConfig("truncate", 6), cache, fresh=True)
    elapsed = time.perf_counter() - t0
    assert off_peak_weight(none) > 0
    assert off_peak_weight(truncate) * 10 <= off_peak_weight(none)
    assert max(strong.normalized, key=strong.normalized.get) == (1, 1)
    assert elapsed < 60.0


def test_ac9_grid_symmetry_and_reality():
    for sigma in (0.0, 0.01, 0.1, 0.5):
        fig1_grid(sigma)
    for grid in GRIDS.values():
        for (a, b), v in grid.raw.items():
            assert abs(v - grid.raw[b, a]) < 1e-12
            assert abs(grid.imag[a, b]) < 1e-12
