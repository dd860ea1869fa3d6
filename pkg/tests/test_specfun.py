"""
Tests for the special-function kernels.
"""
import logging
import math

import numpy as np
import pytest
from scipy import special

from common.exceptions import ConvergenceError, DomainError
from common.models import NormalizationConstant
from ttw.services import specfun


def test_gamma_known_values():
    assert specfun.gamma_real(5.0) == pytest.approx(24.0, rel=1e-13)
    assert specfun.gamma_real(0.5) == pytest.approx(1.772453850905516, rel=1e-13)
    assert specfun.gamma_real(3.5) == pytest.approx(2.5 * 1.5 * 0.5 * math.sqrt(math.pi), rel=1e-13)


def test_gamma_matches_scipy_over_range():
    x = np.linspace(0.05, 60.0, 400)
    ours = np.array([specfun.gamma_real(v) for v in x])
    np.testing.assert_allclose(ours, special.gamma(x), rtol=1e-12)


@pytest.mark.parametrize("x", [1e-3, 0.1, 0.3, 0.49])
def test_gamma_below_half_shifts_upward(x):
    assert specfun.gamma_real(x) == pytest.approx(special.gamma(x), rel=1e-12)
    assert specfun.gamma_real(x) == pytest.approx(specfun.gamma_real(x + 1.0) / x, rel=1e-14)


def test_gamma_recurrence():
    for x in np.linspace(0.1, 50.0, 200):
        assert specfun.gamma_real(x + 1.0) == pytest.approx(x * specfun.gamma_real(x), rel=1e-13)


def test_log_gamma_matches_scipy():
    x = np.linspace(0.1, 150.0, 300)
    ours = np.array([specfun.log_gamma_real(v) for v in x])
    np.testing.assert_allclose(ours, special.gammaln(x), rtol=1e-12, atol=1e-13)


@pytest.mark.parametrize("x", [0.0, -1.0, float("nan"), float("inf")])
def test_gamma_domain(x):
    with pytest.raises(DomainError):
        specfun.gamma_real(x)


def test_laguerre_examples():
    assert specfun.laguerre(0, 0.7, 3.2) == 1.0
    assert specfun.laguerre(1, 0.5, 2.0) == pytest.approx(-0.5)
    assert specfun.laguerre(2, 1.0, 1.0) == pytest.approx(0.5)


def test_laguerre_domain():
    with pytest.raises(DomainError):
        specfun.laguerre(2, -1.0, 0.5)
    with pytest.raises(DomainError):
        specfun.laguerre(-1, 0.5, 0.5)


def test_laguerre_recurrence_vs_explicit(rng):
    for _ in range(1000):
        n = int(rng.integers(0, 13))
        a = float(rng.uniform(-0.5, 5.0))
        x = float(rng.uniform(0.0, 20.0))
        # all terms of the explicit sum are positive at -x
        scale = specfun.laguerre_explicit(n, a, -x)
        recurrence = specfun.laguerre(n, a, x)
        explicit = specfun.laguerre_explicit(n, a, x)
        assert abs(recurrence - explicit) <= 1e-10 * scale
        assert recurrence == pytest.approx(special.eval_genlaguerre(n, a, x), rel=1e-10, abs=1e-10 * scale)


def test_laguerre_vectorized():
    x = np.linspace(0.0, 5.0, 11)
    values = specfun.laguerre(3, 1.5, x)
    assert values.shape == x.shape
    np.testing.assert_allclose(values, special.eval_genlaguerre(3, 1.5, x), rtol=1e-12, atol=1e-12)


def _jacobi_scale(l, a, b):
    return max(abs(specfun.jacobi(l, a, b, 1.0)), abs(specfun.jacobi(l, a, b, -1.0)), 1.0)


def test_jacobi_examples():
    assert specfun.jacobi(0, 0.3, 1.7, 0.4) == 1.0
    assert specfun.jacobi(1, 0.0, 0.0, 0.3) == pytest.approx(0.3)
    assert specfun.jacobi(2, 0.5, 0.5, 0.2) == pytest.approx(special.eval_jacobi(2, 0.5, 0.5, 0.2), rel=1e-13)
    assert specfun.jacobi(2, 0.5, 0.5, 0.2) == pytest.approx(specfun.jacobi_explicit(2, 0.5, 0.5, 0.2), rel=1e-13)


def test_jacobi_recurrence_vs_explicit(rng):
    for _ in range(1000):
        l = int(rng.integers(0, 13))
        a, b = (float(v) for v in rng.uniform(-0.5, 5.0, size=2))
        x = float(rng.uniform(-1.0, 1.0))
        scale = _jacobi_scale(l, a, b)
        recurrence = specfun.jacobi(l, a, b, x)
        assert abs(recurrence - specfun.jacobi_explicit(l, a, b, x)) <= 1e-10 * scale
        assert abs(recurrence - special.eval_jacobi(l, a, b, x)) <= 1e-10 * scale


def test_jacobi_reflection_symmetry(rng):
    for _ in range(200):
        l = int(rng.integers(0, 13))
        a, b = (float(v) for v in rng.uniform(-0.5, 5.0, size=2))
        x = float(rng.uniform(-1.0, 1.0))
        lhs = specfun.jacobi(l, a, b, -x)
        rhs = (-1) ** l * specfun.jacobi(l, b, a, x)
        assert abs(lhs - rhs) <= 1e-12 * _jacobi_scale(l, a, b)


def test_jacobi_outside_interval(caplog):
    with pytest.raises(DomainError):
        specfun.jacobi(2, 0.5, 0.5, 1.5)
    with caplog.at_level(logging.WARNING):
        value = specfun.jacobi(2, 0.5, 0.5, 1.5, allow_extrapolation=True)
    assert value == pytest.approx(special.eval_jacobi(2, 0.5, 0.5, 1.5), rel=1e-12)
    assert "Extrapolating" in caplog.text


def test_bessel_examples():
    assert specfun.bessel_j(0.0, 0.0) == 1.0
    assert specfun.bessel_j(0.5, 1.0).real == pytest.approx(0.6713967071418031, rel=1e-13)
    assert specfun.bessel_j(1.0, 2.0).real == pytest.approx(special.jv(1.0, 2.0), rel=1e-13)


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.3, 2.7, 7.5])
@pytest.mark.parametrize("z", [0.3, 2.0, -1.5j, 1.0 + 2.0j, 6.0 - 1.0j])
def test_bessel_matches_scipy(nu, z):
    expected = special.jv(nu, complex(z))
    assert abs(specfun.bessel_j(nu, z) - expected) <= 1e-12 * max(abs(expected), 1e-3)


@pytest.mark.parametrize("nu", [0.0, 0.5, 1.3, 2.7])
def test_bessel_ode_residual(nu):
    for z in np.linspace(0.5, 10.0, 20):
        j0, j1, j2 = specfun.bessel_j_derivatives(nu, z)
        terms = (z * z * j2, z * j1, (z * z - nu * nu) * j0)
        residual = abs(sum(terms))
        assert residual <= 1e-8 * max(abs(t) for t in terms)


def test_bessel_domain():
    with pytest.raises(DomainError):
        specfun.bessel_j(-0.5, 1.0)
    with pytest.raises(DomainError):
        specfun.bessel_j(1.0, 60.0)


def test_bessel_accurate_below_cancellation_limit():
    for z in (10.0, 15.0, -15.0, 12.0 + 3.0j):
        assert abs(specfun.bessel_j(1.0, z) - special.jv(1.0, z)) <= 1e-9


@pytest.mark.parametrize("z", [25.0, 40.0, 50.0, -50.0, 30.0 + 1.0j])
def test_bessel_cancellation_is_reported(z):
    with pytest.raises(ConvergenceError):
        specfun.bessel_j(1.0, z)
    with pytest.raises(ConvergenceError):
        specfun.bessel_j_derivatives(1.0, z)


@pytest.mark.parametrize("z", [50.0j, -50.0j, 20.0j])
def test_bessel_domain_edge_without_cancellation(z):
    # on the imaginary axis the terms share one phase, so |z| up to 50 is usable
    expected = special.jv(1.0, z)
    assert abs(specfun.bessel_j(1.0, z) - expected) <= 1e-10 * abs(expected)


def test_product_constant():
    # l = 0, a = b = 1/2: 2 * 2 * Gamma(2) / Gamma(3/2)^2 = 16/pi
    assert specfun.bessel_product_constant(0, 0.5, 0.5) == pytest.approx(16.0 / math.pi, rel=1e-13)
    for l in range(6):
        symmetric = specfun.bessel_product_constant(l, 1.2, 1.2, NormalizationConstant.SYMMETRIC)
        squared = specfun.bessel_product_constant(l, 1.2, 1.2, NormalizationConstant.SQUARED)
        assert symmetric == pytest.approx(squared, rel=1e-13)
        assert math.copysign(1.0, symmetric) == (-1) ** l
    assert specfun.bessel_product_constant(2, 0.5, 1.5, NormalizationConstant.SYMMETRIC) != pytest.approx(
        specfun.bessel_product_constant(2, 0.5, 1.5, NormalizationConstant.SQUARED)
    )
