"""
Special-function kernels with real (non-integer) parameters.

Gamma, generalized Laguerre, Jacobi and Bessel J evaluated from recurrences
and power series, plus the coefficient of the Bessel-product expansion.
All functions are pure.
"""
import cmath
import logging
import math
from typing import Tuple, Union

import numpy as np

from common.exceptions import ConvergenceError, DomainError
from common.models import NormalizationConstant

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)

BESSEL_MAX_TERMS = 500
BESSEL_REL_TOL = 1e-16
BESSEL_MAX_ARGUMENT = 50.0
# rounding from cancellation, eps sum|term|, relative to max(|J|, e^|Im z| / sqrt(max(|z|, 1)))
BESSEL_CANCELLATION_TOL = 1e-8


def _check_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise DomainError(f"{name} must be finite, got {value!r}")


def _lanczos_sum(x: float) -> Tuple[float, float]:
    # x is the shifted argument (Gamma(x + 1))
    a = _LANCZOS_COEFFS[0]
    for i in range(1, len(_LANCZOS_COEFFS)):
        a += _LANCZOS_COEFFS[i] / (x + i)
    return a, x + _LANCZOS_G + 0.5


def gamma_real(x: float) -> float:
    """
    Gamma function for positive real arguments (Lanczos, g = 7, nine terms).

    Args:
        x: Argument, x > 0

    Returns:
        Gamma(x)

    Raises:
        DomainError: If x is not finite or not positive
    """
    _check_finite("x", x)
    if x <= 0:
        raise DomainError(f"gamma_real requires x > 0, got {x!r}")
    if x < 0.5:
        return gamma_real(x + 1.0) / x
    a, t = _lanczos_sum(x - 1.0)
    # split the power so t**(x - 0.5) does not overflow before exp(-t) damps it
    half = t ** ((x - 0.5) / 2.0)
    return math.sqrt(2.0 * math.pi) * half * (half * math.exp(-t)) * a


def log_gamma_real(x: float) -> float:
    """
    Natural log of Gamma for positive real arguments.
    """
    _check_finite("x", x)
    if x <= 0:
        raise DomainError(f"log_gamma_real requires x > 0, got {x!r}")
    if x < 0.5:
        return log_gamma_real(x + 1.0) - math.log(x)
    a, t = _lanczos_sum(x - 1.0)
    return _HALF_LOG_TWO_PI + (x - 0.5) * math.log(t) - t + math.log(a)


def _as_output(values: np.ndarray, scalar: bool) -> ArrayLike:
    return float(values) if scalar else values


def laguerre(n: int, a: float, x: ArrayLike) -> ArrayLike:
    """
    Generalized Laguerre polynomial L_n^(a)(x) by the three-term recurrence in n.

    Args:
        n: Degree, n >= 0
        a: Parameter, a > -1
        x: Argument (scalar or array)

    Returns:
        Polynomial value(s), same shape as x

    Raises:
        DomainError: If n < 0 or a <= -1
    """
    if n < 0:
        raise DomainError(f"laguerre degree must be >= 0, got {n}")
    _check_finite("a", a)
    if a <= -1:
        raise DomainError(f"laguerre parameter must be > -1, got {a!r}")
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return _as_output(prev, scalar)
    curr = 1.0 + a - x
    for k in range(1, n):
        prev, curr = curr, ((2 * k + 1 + a - x) * curr - (k + a) * prev) / (k + 1)
    return _as_output(curr, scalar)


def laguerre_explicit(n: int, a: float, x: ArrayLike) -> ArrayLike:
    """
    Generalized Laguerre polynomial from its finite monomial sum.
    """
    if n < 0 or a <= -1:
        raise DomainError(f"invalid Laguerre degree/parameter ({n}, {a!r})")
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    lg_top = log_gamma_real(n + a + 1.0)
    for j in range(n + 1):
        coeff = math.exp(lg_top - math.lgamma(n - j + 1.0) - log_gamma_real(a + j + 1.0) - math.lgamma(j + 1.0))
        total = total + (-1) ** j * coeff * x ** j
    return _as_output(total, scalar)


def jacobi(l: int, a: float, b: float, x: ArrayLike, allow_extrapolation: bool = False) -> ArrayLike:
    """
    Jacobi polynomial P_l^(a,b)(x) by the three-term recurrence in degree.

    Args:
        l: Degree, l >= 0
        a: First parameter, a > -1
        b: Second parameter, b > -1
        x: Argument in [-1, 1] (scalar or array)
        allow_extrapolation: Permit |x| > 1 (logged as a warning)

    Returns:
        Polynomial value(s), same shape as x

    Raises:
        DomainError: On parameter violation or |x| > 1 without allow_extrapolation
    """
    if l < 0:
        raise DomainError(f"jacobi degree must be >= 0, got {l}")
    _check_finite("a", a)
    _check_finite("b", b)
    if a <= -1 or b <= -1:
        raise DomainError(f"jacobi parameters must be > -1, got ({a!r}, {b!r})")
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-14):
        if not allow_extrapolation:
            raise DomainError("jacobi argument outside [-1, 1]; pass allow_extrapolation=True to extrapolate")
        logger.warning("Extrapolating Jacobi polynomial outside [-1, 1] (max |x| = %s)", float(np.max(np.abs(x))))
    prev = np.ones_like(x)
    if l == 0:
        return _as_output(prev, scalar)
    curr = (a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0
    ab2 = a * a - b * b
    for n in range(2, l + 1):
        s = 2 * n + a + b
        lead = 2.0 * n * (n + a + b) * (s - 2.0)
        c1 = (s - 1.0) * (s * (s - 2.0) * x + ab2)
        c2 = 2.0 * (n + a - 1.0) * (n + b - 1.0) * s
        prev, curr = curr, (c1 * curr - c2 * prev) / lead
    return _as_output(curr, scalar)


def jacobi_explicit(l: int, a: float, b: float, x: ArrayLike) -> ArrayLike:
    """
    Jacobi polynomial from the finite sum over powers of (x-1)/2 and (x+1)/2.
    """
    if l < 0 or a <= -1 or b <= -1:
        raise DomainError(f"invalid Jacobi degree/parameters ({l}, {a!r}, {b!r})")
    scalar = np.ndim(x) == 0
    x = np.asarray(x, dtype=float)
    lo = (x - 1.0) / 2.0
    hi = (x + 1.0) / 2.0
    lg_top = log_gamma_real(l + a + 1.0) + log_gamma_real(l + b + 1.0)
    total = np.zeros_like(x)
    for s in range(l + 1):
        coeff = math.exp(
            lg_top
            - math.lgamma(s + 1.0)
            - math.lgamma(l - s + 1.0)
            - log_gamma_real(a + s + 1.0)
            - log_gamma_real(b + l - s + 1.0)
        )
        total = total + coeff * lo ** s * hi ** (l - s)
    return _as_output(total, scalar)


def _bessel_terms(nu: float, z: complex):
    """Yield (m, term) of the power series of J_nu at z != 0."""
    term = cmath.exp(nu * cmath.log(z / 2.0) - log_gamma_real(nu + 1.0))
    step = -(z * z) / 4.0
    m = 0
    while True:
        yield m, term
        term = term * step / ((m + 1.0) * (nu + m + 1.0))
        m += 1


def _check_cancellation(nu: float, z: complex, magnitude: float, total: complex) -> None:
    # magnitude is sum |term|; alternating real-axis series lose eps * magnitude to rounding
    typical = math.exp(abs(z.imag)) / math.sqrt(max(abs(z), 1.0))
    lost = np.finfo(float).eps * magnitude
    if lost > BESSEL_CANCELLATION_TOL * max(abs(total), typical):
        logger.error("Bessel series for nu=%s, z=%s lost precision to cancellation", nu, z)
        raise ConvergenceError(
            f"bessel_j({nu}, {z}): series cancellation leaves rounding {lost:.3e}, above "
            f"{BESSEL_CANCELLATION_TOL:g} of the function scale"
        )


def _check_bessel(nu: float, z: complex) -> None:
    _check_finite("nu", nu)
    if nu < 0:
        raise DomainError(f"bessel_j order must be >= 0, got {nu!r}")
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"bessel_j argument must be finite, got {z!r}")
    if abs(z) > BESSEL_MAX_ARGUMENT:
        raise DomainError(f"bessel_j restricted to |z| <= {BESSEL_MAX_ARGUMENT}, got |z| = {abs(z)}")


def bessel_j(nu: float, z: complex) -> complex:
    """
    Bessel function of the first kind by its power series.

    (z/2)**nu is taken on the principal branch, so negative or complex
    arguments give the principal value.

    Args:
        nu: Order, nu >= 0
        z: Argument, |z| <= 50

    Returns:
        J_nu(z) as a complex number

    Raises:
        DomainError: For nu < 0 or |z| > 50
        ConvergenceError: If 500 terms do not reach the tolerance, or if
            cancellation between terms (real z beyond about 18) leaves
            rounding above 1e-8 of the function scale
    """
    z = complex(z)
    _check_bessel(nu, z)
    if z == 0:
        return 1.0 + 0j if nu == 0 else 0j
    total = 0j
    magnitude = 0.0
    growth_over = abs(z) / 2.0
    for m, term in _bessel_terms(nu, z):
        total += term
        magnitude += abs(term)
        # terms only shrink once m exceeds |z|/2
        if m > growth_over and abs(term) <= BESSEL_REL_TOL * abs(total):
            _check_cancellation(nu, z, magnitude, total)
            return total
        if m + 1 >= BESSEL_MAX_TERMS:
            break
    logger.error("Bessel series for nu=%s, z=%s did not converge", nu, z)
    raise ConvergenceError(f"bessel_j({nu}, {z}) did not converge in {BESSEL_MAX_TERMS} terms")


def bessel_j_derivatives(nu: float, z: complex) -> Tuple[complex, complex, complex]:
    """
    J_nu(z) with its first and second derivatives, differentiating the series termwise.
    """
    z = complex(z)
    _check_bessel(nu, z)
    if z == 0:
        raise DomainError("derivatives are evaluated away from z = 0")
    j0 = j1 = j2 = 0j
    magnitude = 0.0
    for m, term in _bessel_terms(nu, z):
        power = nu + 2 * m
        j0 += term
        magnitude += abs(term)
        j1 += power * term / z
        j2 += power * (power - 1.0) * term / (z * z)
        if m > abs(z) / 2.0 and abs(term) * max(1.0, power * power) <= BESSEL_REL_TOL * abs(j0):
            _check_cancellation(nu, z, magnitude, j0)
            return j0, j1, j2
        if m + 1 >= BESSEL_MAX_TERMS:
            break
    raise ConvergenceError(f"bessel_j derivatives ({nu}, {z}) did not converge in {BESSEL_MAX_TERMS} terms")


def bessel_product_constant(
    l: int,
    a: float,
    b: float,
    convention: NormalizationConstant = NormalizationConstant.SYMMETRIC,
) -> float:
    """
    Coefficient of J_{2l+a+b+1}(w)/w in the expansion of J_a(w s s') J_b(w c c').

    (-1)^l * 2(2l+a+b+1) * l! Gamma(l+a+b+1) divided by
    Gamma(l+a+1) Gamma(l+b+1) (symmetric) or Gamma(l+a+1)^2 (squared).

    Args:
        l: Expansion index
        a: First Bessel order
        b: Second Bessel order
        convention: Denominator convention

    Returns:
        The coefficient
    """
    if l < 0 or a <= -1 or b <= -1:
        raise DomainError(f"invalid product-constant arguments ({l}, {a!r}, {b!r})")
    if convention == NormalizationConstant.SYMMETRIC:
        denominator = log_gamma_real(l + a + 1.0) + log_gamma_real(l + b + 1.0)
    else:
        denominator = 2.0 * log_gamma_real(l + a + 1.0)
    log_mag = math.lgamma(l + 1.0) + log_gamma_real(l + a + b + 1.0) - denominator
    return (-1) ** l * 2.0 * (2 * l + a + b + 1.0) * math.exp(log_mag)
