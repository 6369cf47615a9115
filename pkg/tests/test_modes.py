import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zernturb.modes import (
    ModeIndex,
    ModeIndexError,
    PolarPoint,
    enumerate_modes,
    fourier_zernike_eval,
    radial_poly,
    zernike_eval,
)
from zernturb.oracle import QuadratureSpec, completeness_residual, disk_integral
from zernturb.specfun import bessel_j

valid_modes = st.integers(0, 20).flatmap(lambda n: st.sampled_from([ModeIndex(n, m) for m in range(-n, n + 1, 2)]))


def test_mode_index_validation():
    ModeIndex(3, -1)
    for n, m in [(1, 0), (2, 3), (-1, 1), (4, 1)]:
        with pytest.raises(ModeIndexError):
            ModeIndex(n, m)
    assert issubclass(ModeIndexError, ValueError)


def test_polar_point_rejects_negative_radius():
    with pytest.raises(ValueError):
        PolarPoint(-0.1, 0.0)


def test_radial_poly_examples():
    assert radial_poly(0, 0, 0.7) == 1.0
    assert radial_poly(1, 1, 1.0) == 1.0
    assert radial_poly(2, 0, 0.5) == pytest.approx(-0.5, abs=1e-15)
    with pytest.raises(ModeIndexError):
        radial_poly(3, 0, 0.5)


@pytest.mark.parametrize("mode", enumerate_modes(10))
def test_radial_poly_is_one_at_rim(mode):
    assert radial_poly(mode.n, abs(mode.m), 1.0) == pytest.approx(1.0, abs=1e-12)


def test_radial_poly_low_orders_closed_forms():
    rho = np.linspace(0, 1, 11)
    np.testing.assert_allclose(radial_poly(4, 0, rho), 6 * rho**4 - 6 * rho**2 + 1, atol=1e-14)
    np.testing.assert_allclose(radial_poly(3, 1, rho), 3 * rho**3 - 2 * rho, atol=1e-14)
    np.testing.assert_allclose(radial_poly(4, 2, rho), 4 * rho**4 - 3 * rho**2, atol=1e-14)


def test_radial_poly_explicit_sum_matches_jacobi_form():
    from zernturb.specfun import jacobi

    rho = np.linspace(0, 1, 101)
    for mode in enumerate_modes(12):
        n, m = mode.n, abs(mode.m)
        k = (n - m) // 2
        ref = (-1) ** k * rho**m * jacobi(k, m, 0, 1 - 2 * rho**2)
        np.testing.assert_allclose(radial_poly(n, m, rho), ref, atol=1e-12)


def test_radial_poly_high_order_is_stable():
    # high orders go through the Jacobi recurrence: bounded by 1 and equal to 1 at the rim
    rho = np.linspace(0, 1, 2001)
    for n, m in [(40, 0), (81, 1), (160, 0), (161, 3)]:
        r = radial_poly(n, m, rho)
        assert np.max(np.abs(r)) <= 1 + 1e-10
        assert r[-1] == pytest.approx(1.0, abs=1e-10)


def test_zernike_eval_examples():
    assert zernike_eval((0, 0), PolarPoint(0.3, 1.0)) == 1 + 0j
    assert zernike_eval((2, 0), PolarPoint(1.5, 0.0)) == 0
    val = zernike_eval((1, 1), PolarPoint(0.5, math.pi / 2))
    assert val == pytest.approx(math.sqrt(2) * 0.5j, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(valid_modes, st.floats(0, 1), st.floats(0, 2 * math.pi))
def test_conjugation_symmetry(mode, r, theta):
    p = PolarPoint(r, theta)
    a = zernike_eval(ModeIndex(mode.n, -mode.m), p)
    b = zernike_eval(mode, p)
    assert a == pytest.approx(b.conjugate(), abs=1e-12)


def test_fourier_zernike_examples():
    assert fourier_zernike_eval((0, 0), PolarPoint(0.0)) == pytest.approx(math.pi)
    assert fourier_zernike_eval((2, 0), PolarPoint(0.0)) == 0
    val = fourier_zernike_eval((1, 1), PolarPoint(0.5, 0.0))
    ref = 2 * math.pi * 1j * math.sqrt(2) * bessel_j(2, math.pi) / math.pi
    assert val == pytest.approx(ref, rel=1e-14)


def test_fourier_zernike_is_continuous_at_origin():
    for mode in enumerate_modes(4):
        near = fourier_zernike_eval(mode, PolarPoint(1e-7, 0.3))
        at = fourier_zernike_eval(mode, PolarPoint(0.0, 0.3))
        assert abs(near - at) < 1e-6


def test_enumerate_modes():
    assert enumerate_modes(0) == [ModeIndex(0, 0)]
    assert enumerate_modes(1) == [ModeIndex(0, 0), ModeIndex(1, -1), ModeIndex(1, 1)]
    for n_max in range(12):
        modes = enumerate_modes(n_max)
        assert len(modes) == (n_max + 1) * (n_max + 2) // 2
        assert modes == sorted(modes, key=lambda m: (m.n, m.m))


def test_orthonormality_up_to_order_four():
    spec = QuadratureSpec(radial_nodes=16, angular_nodes=32)
    modes = enumerate_modes(4)
    for a in modes:
        for b in modes:
            v = disk_integral(lambda p: zernike_eval(a, p) * np.conj(zernike_eval(b, p)), spec)
            assert abs(v - (math.pi if a == b else 0)) < 1e-10


def test_mixed_completeness_converges():
    s, q = PolarPoint(0.3, 0.7), PolarPoint(0.4, 1.1)
    r10 = completeness_residual(s, q, 10)
    r30 = completeness_residual(s, q, 30)
    assert r30 < r10
    assert completeness_residual(PolarPoint(0.0, 0.0), PolarPoint(0.0, 0.0), 0) == pytest.approx(0.0, abs=1e-15)


def test_mixed_completeness_near_rim_is_slow_but_improves():
    s, q = PolarPoint(0.99, 0.2), PolarPoint(0.4, 1.1)
    res = [completeness_residual(s, q, n) for n in (10, 20, 30)]
    assert res[2] < res[0]
