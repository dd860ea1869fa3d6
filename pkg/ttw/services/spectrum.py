"""
Eigenvalues, eigenstates, normalization and degeneracy enumeration.

Eigenstates separate into an angular Poschl-Teller factor

    (sin k theta)^(p_phi + 1/2) (cos k theta)^(p_psi + 1/2) P_l^(p_phi, p_psi)(x*)

and a radial Laguerre factor

    exp(-x/2) x^(lam/2) L_n^(lam)(x),  x = omega r^2,  lam = k (2 l + p_phi + p_psi + 1).
"""
import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Tuple, Union

import numpy as np
from scipy.special import roots_laguerre, roots_legendre

from common.exceptions import ConfigError, DomainError, QuadratureError
from common.models import (
    DegeneracyClass,
    EnergyLevel,
    JacobiArgument,
    NormalizationConstant,
    PotentialParams,
    QuantumNumbers,
    SpectrumConvention,
)
from ttw.config import config
from ttw.services import specfun

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def default_convention() -> SpectrumConvention:
    try:
        return SpectrumConvention(config.SPECTRUM.CONVENTION)
    except ValueError as e:
        raise ConfigError(f"unknown spectrum convention {config.SPECTRUM.CONVENTION!r}") from e


def default_jacobi_argument() -> JacobiArgument:
    try:
        return JacobiArgument(config.SPECTRUM.JACOBI_ARGUMENT)
    except ValueError as e:
        raise ConfigError(f"unknown Jacobi argument convention {config.SPECTRUM.JACOBI_ARGUMENT!r}") from e


def default_n_constant() -> NormalizationConstant:
    try:
        return NormalizationConstant(config.SPECTRUM.N_CONSTANT)
    except ValueError as e:
        raise ConfigError(f"unknown expansion constant {config.SPECTRUM.N_CONSTANT!r}") from e


def angular_exponent_pair(params: PotentialParams) -> Tuple[float, float]:
    """
    Poschl-Teller exponents (sqrt(alpha + 1/4), sqrt(beta + 1/4)).
    """
    return params.p_phi, params.p_psi


def radial_index(l1: int, params: PotentialParams) -> float:
    """
    Laguerre parameter k (2 l1 + p_phi + p_psi + 1), also the radial exponent.
    """
    return params.k_float * (2 * l1 + params.p_phi + params.p_psi + 1.0)


def _exact_sqrt(value: Fraction) -> Optional[Fraction]:
    num, den = value.numerator, value.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None


def exact_exponent_pair(params: PotentialParams) -> Optional[Tuple[Fraction, Fraction]]:
    """
    Exponents as exact rationals, or None when alpha + 1/4 or beta + 1/4
    is not the square of a rational.
    """
    quarter = Fraction(1, 4)
    p_phi = _exact_sqrt(Fraction(params.alpha) + quarter)
    p_psi = _exact_sqrt(Fraction(params.beta) + quarter)
    if p_phi is None or p_psi is None:
        return None
    return p_phi, p_psi


def energy(qn: QuantumNumbers, params: PotentialParams, convention: Optional[SpectrumConvention] = None) -> float:
    """
    Energy of (n_r, l1) under the chosen closed-form convention.

    Args:
        qn: Quantum numbers
        params: Potential parameters
        convention: PaperEqE (2(2l1+p_phi+p_psi+1)k + 2n_r, no omega) or
            Resolved (2 omega (2 n_r + k(2l1+p_phi+p_psi+1) + 1)); defaults to config

    Returns:
        The energy
    """
    convention = convention or default_convention()
    lam = radial_index(qn.l1, params)
    if convention == SpectrumConvention.PAPER_EQ_E:
        return 2.0 * lam + 2.0 * qn.n_r
    return 2.0 * params.omega * (2.0 * qn.n_r + lam + 1.0)


def energy_exact(
    qn: QuantumNumbers,
    params: PotentialParams,
    convention: Optional[SpectrumConvention] = None,
    exponents: Optional[Tuple[Fraction, Fraction]] = None,
) -> Optional[Fraction]:
    """
    Energy as an exact rational, None when the exponents are irrational.
    """
    convention = convention or default_convention()
    exponents = exponents or exact_exponent_pair(params)
    if exponents is None:
        return None
    p_phi, p_psi = exponents
    lam = params.k * (2 * qn.l1 + p_phi + p_psi + 1)
    if convention == SpectrumConvention.PAPER_EQ_E:
        return 2 * lam + 2 * qn.n_r
    return 2 * Fraction(params.omega) * (2 * qn.n_r + lam + 1)


def enumerate_levels(
    params: PotentialParams,
    e_max: float,
    convention: Optional[SpectrumConvention] = None,
) -> List[DegeneracyClass]:
    """
    All levels with E <= e_max, sorted by energy then n_r, grouped into degeneracy classes.

    Grouping is exact when p_phi and p_psi are rational (k always is);
    otherwise energies within DEGENERACY_RTOL of a class head join that class.

    Args:
        params: Potential parameters
        e_max: Energy ceiling
        convention: Spectrum convention, defaults to config

    Returns:
        Degeneracy classes in ascending energy order
    """
    if not math.isfinite(e_max):
        raise DomainError(f"e_max must be finite, got {e_max!r}")
    convention = convention or default_convention()
    exponents = exact_exponent_pair(params)
    levels: List[EnergyLevel] = []

    l1 = 0
    while energy(QuantumNumbers(n_r=0, l1=l1), params, convention) <= e_max:
        n_r = 0
        while True:
            qn = QuantumNumbers(n_r=n_r, l1=l1)
            exact = energy_exact(qn, params, convention, exponents) if exponents else None
            value = float(exact) if exact is not None else energy(qn, params, convention)
            if (exact is not None and exact > Fraction(e_max)) or (exact is None and value > e_max):
                break
            levels.append(EnergyLevel(qn=qn, energy=value, energy_exact=exact))
            n_r += 1
        l1 += 1

    if exponents is not None:
        levels.sort(key=lambda lv: (lv.energy_exact, lv.qn.n_r))
    else:
        levels.sort(key=lambda lv: (lv.energy, lv.qn.n_r))

    classes: List[DegeneracyClass] = []
    rtol = config.SPECTRUM.DEGENERACY_RTOL
    for level in levels:
        if classes:
            head = classes[-1]
            if exponents is not None:
                same = level.energy_exact == head.energy_exact
            else:
                same = abs(level.energy - head.energy) <= rtol * abs(head.energy)
            if same:
                head.levels.append(level)
                continue
        classes.append(
            DegeneracyClass(
                class_id=len(classes), energy=level.energy, energy_exact=level.energy_exact, levels=[level]
            )
        )
    logger.info("Enumerated %s levels in %s classes below E=%s", len(levels), len(classes), e_max)
    return classes


def _jacobi_argument(k_theta: np.ndarray, argument: JacobiArgument) -> np.ndarray:
    if argument == JacobiArgument.COS_2T:
        x = np.cos(2.0 * k_theta)
    else:
        x = 2.0 * np.sin(k_theta) ** 2 - 1.0
    return np.clip(x, -1.0, 1.0)


def angular_wavefunction(
    l1: int,
    theta: ArrayLike,
    params: PotentialParams,
    argument: Optional[JacobiArgument] = None,
) -> ArrayLike:
    """
    Unnormalized angular factor of an eigenstate.

    Args:
        l1: Angular index
        theta: Angle(s) in [0, pi/(2k)]; the walls return exactly 0
        params: Potential parameters
        argument: Jacobi argument convention, defaults to config

    Returns:
        Value(s), same shape as theta

    Raises:
        DomainError: If theta lies outside the wedge
    """
    argument = argument or default_jacobi_argument()
    scalar = np.ndim(theta) == 0
    theta = np.asarray(theta, dtype=float)
    theta_max = params.theta_max
    if np.any(theta < 0.0) or np.any(theta > theta_max * (1.0 + 1e-14)):
        raise DomainError(f"theta outside [0, {theta_max}]")
    k_theta = params.k_float * theta
    interior = (theta > 0.0) & (theta < theta_max)
    safe = np.where(interior, k_theta, math.pi / 4.0)
    envelope = np.sin(safe) ** (params.p_phi + 0.5) * np.cos(safe) ** (params.p_psi + 0.5)
    poly = specfun.jacobi(l1, params.p_phi, params.p_psi, _jacobi_argument(safe, argument))
    values = np.where(interior, envelope * poly, 0.0)
    return float(values) if scalar else values


def radial_factor(n_r: int, l1: int, params: PotentialParams, r: ArrayLike) -> ArrayLike:
    """
    Unnormalized radial factor exp(-x/2) x^(lam/2) L_n^(lam)(x) with x = omega r^2.
    """
    scalar = np.ndim(r) == 0
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise DomainError("r must be non-negative")
    lam = radial_index(l1, params)
    x = params.omega * r * r
    positive = x > 0.0
    safe = np.where(positive, x, 1.0)
    envelope = np.exp(0.5 * lam * np.log(safe) - 0.5 * safe)
    values = np.where(positive, envelope * specfun.laguerre(n_r, lam, safe), 0.0)
    return float(values) if scalar else values


def eigenstate(qn: QuantumNumbers, params: PotentialParams, r: ArrayLike, theta: ArrayLike) -> ArrayLike:
    """
    Unnormalized eigenstate amplitude; r and theta broadcast against each other.
    """
    return radial_factor(qn.n_r, qn.l1, params, r) * angular_wavefunction(qn.l1, theta, params)


@lru_cache(maxsize=16)
def laguerre_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Laguerre nodes and log-weights (weight exp(-x)).
    """
    nodes, weights = roots_laguerre(order)
    with np.errstate(divide="ignore"):
        log_weights = np.log(weights)
    return nodes, log_weights


@lru_cache(maxsize=32)
def legendre_rule(order: int, lo: float, hi: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre nodes and weights mapped to [lo, hi].
    """
    nodes, weights = roots_legendre(order)
    half = 0.5 * (hi - lo)
    return lo + half * (nodes + 1.0), half * weights


def radial_basis_on_rule(n_r: int, lam: float, order: int) -> np.ndarray:
    """
    sqrt(w_i) x_i^(lam/2) L_n^(lam)(x_i) on the Gauss-Laguerre rule.

    Sums of products of these vectors integrate the radial factors against dx.
    """
    nodes, log_weights = laguerre_rule(order)
    return np.exp(0.5 * log_weights + 0.5 * lam * np.log(nodes)) * specfun.laguerre(n_r, lam, nodes)


def angular_basis_on_rule(l1: int, params: PotentialParams, order: int) -> np.ndarray:
    """
    sqrt(w_j) times the angular factor on the Gauss-Legendre rule over the wedge.
    """
    nodes, weights = legendre_rule(order, 0.0, params.theta_max)
    return np.sqrt(weights) * angular_wavefunction(l1, nodes, params)


def _norm_squared(qn: QuantumNumbers, params: PotentialParams, order: int) -> float:
    lam = radial_index(qn.l1, params)
    radial = np.sum(radial_basis_on_rule(qn.n_r, lam, order) ** 2) / (2.0 * params.omega)
    angular = np.sum(angular_basis_on_rule(qn.l1, params, order) ** 2)
    return float(radial * angular)


def norm_constant(qn: QuantumNumbers, params: PotentialParams, order: Optional[int] = None) -> float:
    """
    Constant c with integral |c psi|^2 r dr dtheta = 1.

    The integral separates; radial and angular parts use Gauss-Laguerre and
    Gauss-Legendre rules of the same order, checked against the doubled order.

    Args:
        qn: Quantum numbers
        params: Potential parameters
        order: Quadrature order, defaults to config

    Returns:
        The normalization constant

    Raises:
        QuadratureError: If the doubled order changes c by more than the tolerance
    """
    order = order or config.SPECTRUM.QUADRATURE_ORDER
    coarse = 1.0 / math.sqrt(_norm_squared(qn, params, order))
    fine = 1.0 / math.sqrt(_norm_squared(qn, params, 2 * order))
    change = abs(fine - coarse) / fine
    if change > config.SPECTRUM.QUADRATURE_TOL:
        logger.error("Normalization of %s not converged: relative change %s", qn, change)
        raise QuadratureError(f"norm constant for {qn} changed by {change:.3e} on doubling the order")
    return fine


def radial_norm_closed_form(n_r: int, lam: float, omega: float) -> float:
    """
    Closed form of the radial integral Gamma(n+lam+1) / (n! 2 omega).
    """
    return math.exp(specfun.log_gamma_real(n_r + lam + 1.0) - math.lgamma(n_r + 1.0)) / (2.0 * omega)


def normalized_eigenstate(qn: QuantumNumbers, params: PotentialParams, r: ArrayLike, theta: ArrayLike) -> ArrayLike:
    return norm_constant(qn, params) * eigenstate(qn, params, r, theta)
