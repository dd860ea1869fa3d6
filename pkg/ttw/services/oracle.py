"""
Independent numerical ground truth.

Finite-difference eigen-solvers for the separated angular and radial
problems, the Bessel-product expansion checker and the arbitration that
picks the shipped conventions.
"""
import logging
import math
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import eigh_tridiagonal

from common.exceptions import DomainError, OracleConvergenceError
from common.models import JacobiArgument, NormalizationConstant, SpectrumConvention
from ttw.config import config
from ttw.models import (
    INCONCLUSIVE,
    INDISTINGUISHABLE,
    EigenvalueComparison,
    GridSpec,
    IdentityCase,
    IdentityCheck,
    JacobiArgumentCheck,
    PotentialParams,
    QuantumNumbers,
    RadialComparison,
    RadialLevel,
    SpectrumArbitration,
    TailPoint,
    ValidationReport,
)
from ttw.services import specfun, spectrum

logger = logging.getLogger(__name__)

Potential = Callable[[np.ndarray], np.ndarray]


def count_sign_changes(vector: np.ndarray, rel_floor: float = 1e-8) -> int:
    significant = vector[np.abs(vector) > rel_floor * np.max(np.abs(vector))]
    return int(np.sum(significant[1:] * significant[:-1] < 0))


def _fd_operator(
    potential: Potential, lo: float, hi: float, n_cells: int, offset_lo: bool, offset_hi: bool
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    # -d2/dx2 + V on n_cells - 1 interior nodes, Dirichlet at the (offset) ends
    eps = (hi - lo) / (10.0 * n_cells)
    a = lo + (eps if offset_lo else 0.0)
    b = hi - (eps if offset_hi else 0.0)
    h = (b - a) / n_cells
    nodes = a + h * np.arange(1, n_cells)
    diag = 2.0 / h ** 2 + potential(nodes)
    off = np.full(n_cells - 2, -1.0 / h ** 2)
    return nodes, diag, off


def tridiagonal_eigenvalues(diag: np.ndarray, off: np.ndarray, n_levels: int) -> np.ndarray:
    """
    Lowest eigenvalues by Sturm-sequence bisection (LAPACK stebz).
    """
    return eigh_tridiagonal(
        diag, off, eigvals_only=True, select="i", select_range=(0, n_levels - 1), lapack_driver="stebz"
    )


def tridiagonal_eigenvectors(diag: np.ndarray, off: np.ndarray, n_levels: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Lowest eigenpairs; vectors by inverse iteration on the bisection eigenvalues (LAPACK stein).

    Returns:
        (eigenvalues, eigenvectors as columns)
    """
    return eigh_tridiagonal(
        diag, off, eigvals_only=False, select="i", select_range=(0, n_levels - 1), lapack_driver="stebz"
    )


def richardson(estimates: Sequence[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    """
    Richardson table for grids refined by 2, eliminating h, h^2, ... in turn.

    Args:
        estimates: Eigenvalue arrays from the coarsest to the finest grid

    Returns:
        (best extrapolation, extrapolation with one fewer elimination)
    """
    rows: List[List[np.ndarray]] = []
    for j, value in enumerate(estimates):
        row = [np.asarray(value, dtype=float)]
        for m in range(1, j + 1):
            factor = 2.0 ** m
            row.append((factor * row[m - 1] - rows[j - 1][m - 1]) / (factor - 1.0))
        rows.append(row)
    return rows[-1][-1], rows[-1][-2]


def _solve(
    potential: Potential, n_levels: int, grid: GridSpec, offset_lo: bool, offset_hi: bool, label: str
) -> np.ndarray:
    lo, hi = grid.domain
    estimates = []
    for level in range(grid.refinement_levels):
        n_cells = grid.n_points * 2 ** level
        _, diag, off = _fd_operator(potential, lo, hi, n_cells, offset_lo, offset_hi)
        estimates.append(tridiagonal_eigenvalues(diag, off, n_levels))
    best, previous = richardson(estimates)
    change = float(np.max(np.abs(best - previous) / np.abs(best)))
    logger.debug("%s: extrapolated %s (last change %s)", label, best, change)
    if change > 1e-3:
        logger.error("%s eigenvalues not converged: relative change %s", label, change)
        raise OracleConvergenceError(f"{label} eigenvalues changed by {change:.3e} at the last refinement")
    return best


def angular_potential(alpha: float, beta: float) -> Potential:
    def potential(theta: np.ndarray) -> np.ndarray:
        values = np.zeros_like(theta)
        if alpha:
            values = values + alpha / np.sin(theta) ** 2
        if beta:
            values = values + beta / np.cos(theta) ** 2
        return values

    return potential


def default_angular_grid() -> GridSpec:
    return GridSpec(
        n_points=config.ORACLE.ANGULAR_POINTS,
        domain=(0.0, math.pi / 2.0),
        refinement_levels=config.ORACLE.REFINEMENT_LEVELS,
    )


def angular_eigenvalues(alpha: float, beta: float, n_levels: int, grid: Optional[GridSpec] = None) -> List[float]:
    """
    Lowest eigenvalues of -d2/dT2 + alpha/sin^2 T + beta/cos^2 T on (0, pi/2).

    Walls carrying a barrier are moved in by domain/(10 n) on every grid.

    Args:
        alpha: Barrier at T = 0
        beta: Barrier at T = pi/2
        n_levels: Number of eigenvalues
        grid: Grid and refinement levels, defaults to config

    Returns:
        Richardson-extrapolated eigenvalues

    Raises:
        OracleConvergenceError: If the extrapolation has not settled
    """
    if alpha < 0 or beta < 0:
        raise DomainError("barrier strengths must be non-negative")
    grid = grid or default_angular_grid()
    values = _solve(angular_potential(alpha, beta), n_levels, grid, alpha != 0, beta != 0, "angular")
    return [float(v) for v in values]


def angular_node_counts(alpha: float, beta: float, n_levels: int, grid: Optional[GridSpec] = None) -> List[int]:
    """
    Interior sign changes of the lowest angular eigenvectors on the base grid.
    """
    grid = grid or default_angular_grid()
    lo, hi = grid.domain
    _, diag, off = _fd_operator(angular_potential(alpha, beta), lo, hi, grid.n_points, alpha != 0, beta != 0)
    _, vectors = tridiagonal_eigenvectors(diag, off, n_levels)
    return [count_sign_changes(vectors[:, index]) for index in range(vectors.shape[1])]


def radial_domain(lam_k: float, omega: float, n_levels: int) -> Tuple[float, float]:
    """
    Half-line cut-off (0, R) with R^2 = 4 E_top max(1/omega, 1/omega^2).
    """
    e_top = 2.0 * omega * (2.0 * (n_levels - 1) + lam_k + 1.0)
    r_max = math.sqrt(4.0 * e_top * max(1.0 / omega, 1.0 / omega ** 2))
    return 0.0, r_max


def radial_eigenvalues(lam_k: float, omega: float, n_levels: int, grid: Optional[GridSpec] = None) -> List[float]:
    """
    Lowest eigenvalues of -d2/dr2 + (lam_k^2 - 1/4)/r^2 + omega^2 r^2 on the half line.

    Args:
        lam_k: Angular factor k (2 l1 + p_phi + p_psi + 1)
        omega: Trap frequency
        n_levels: Number of eigenvalues
        grid: Grid over (0, R); by default R follows radial_domain

    Returns:
        Richardson-extrapolated eigenvalues
    """
    if lam_k < 0 or omega <= 0:
        raise DomainError("radial oracle needs lam_k >= 0 and omega > 0")
    grid = grid or GridSpec(
        n_points=config.ORACLE.RADIAL_POINTS,
        domain=radial_domain(lam_k, omega, n_levels),
        refinement_levels=config.ORACLE.REFINEMENT_LEVELS,
    )
    centrifugal = lam_k ** 2 - 0.25

    def potential(r: np.ndarray) -> np.ndarray:
        return centrifugal / r ** 2 + omega ** 2 * r ** 2

    values = _solve(potential, n_levels, grid, centrifugal != 0, False, "radial")
    return [float(v) for v in values]


def _max_rel(errors: List[float]) -> float:
    return max(errors) if errors else 0.0


def arbitrate_spectrum(
    params: PotentialParams,
    l1_max: int,
    n_levels: int,
    angular_grid: Optional[GridSpec] = None,
    radial_points: Optional[int] = None,
    refinement_levels: Optional[int] = None,
) -> SpectrumArbitration:
    """
    Compare the oracle spectrum with both closed-form conventions.

    The radial oracle takes lam_k from the oracle angular eigenvalue, so no
    closed form enters the oracle side.
    """
    pair = spectrum.angular_exponent_pair(params)
    angular_values = angular_eigenvalues(params.alpha, params.beta, l1_max + 1, angular_grid)
    angular = []
    for l1, value in enumerate(angular_values):
        analytic = (2 * l1 + pair[0] + pair[1] + 1.0) ** 2
        angular.append(EigenvalueComparison(l1=l1, oracle=value, analytic=analytic, rel_error=abs(value - analytic) / analytic))

    errors: Dict[str, List[float]] = {c.value: [] for c in SpectrumConvention}
    radial = []
    for l1, value in enumerate(angular_values):
        lam_k = params.k_float * math.sqrt(value)
        grid = GridSpec(
            n_points=radial_points or config.ORACLE.RADIAL_POINTS,
            domain=radial_domain(lam_k, params.omega, n_levels),
            refinement_levels=refinement_levels or config.ORACLE.REFINEMENT_LEVELS,
        )
        oracle_levels = radial_eigenvalues(lam_k, params.omega, n_levels, grid)
        rows = []
        for n_r, oracle_value in enumerate(oracle_levels):
            qn = QuantumNumbers(n_r=n_r, l1=l1)
            closed = {c.value: spectrum.energy(qn, params, c) for c in SpectrumConvention}
            for name, closed_value in closed.items():
                errors[name].append(abs(oracle_value - closed_value) / abs(oracle_value))
            rows.append(RadialLevel(n_r=n_r, oracle=oracle_value, **closed))
        radial.append(RadialComparison(l1=l1, lam_k=lam_k, levels=rows))

    max_err = {name: _max_rel(values) for name, values in errors.items()}
    matches = [name for name, value in max_err.items() if value <= config.ORACLE.MATCH_RTOL]
    winner = matches[0] if len(matches) == 1 else INCONCLUSIVE
    logger.info("Spectrum arbitration: %s (max relative errors %s)", winner, max_err)
    return SpectrumArbitration(angular=angular, radial=radial, max_rel_error=max_err, winner=winner)


def bessel_product_identity_check(p_phi: float, p_psi: float, x: float, y: float, l1_max: int) -> IdentityCase:
    """
    Evaluate both sides of the Bessel-product expansion at equal angles.

    With Theta = Phi, z = x + y, sin^2 = x/z and w = -i z, the left side is
    J_{p_phi}(-i x) J_{p_psi}(-i y) and the right side is

        sum_l C_l J_{2l+p_phi+p_psi+1}(w)/w * (x/z)^p_phi (y/z)^p_psi P_l((y-x)/z)^2

    under each candidate constant C_l.

    Args:
        p_phi: First order
        p_psi: Second order
        x: Positive argument share paired with sin
        y: Positive argument share paired with cos
        l1_max: Last expansion index, at most 40

    Returns:
        Both sides and relative residuals
    """
    if x <= 0 or y <= 0:
        raise DomainError("identity check needs x, y > 0")
    if l1_max > 40:
        raise DomainError("identity check supports l1_max <= 40")
    z = x + y
    w = -1j * z
    lhs = specfun.bessel_j(p_phi, -1j * x) * specfun.bessel_j(p_psi, -1j * y)
    doubled = specfun.bessel_j(p_phi, -1j * x) * specfun.bessel_j(p_psi, -2j * y)
    envelope = (x / z) ** p_phi * (y / z) ** p_psi
    argument = (y - x) / z
    sums = {c: 0j for c in NormalizationConstant}
    for l1 in range(l1_max + 1):
        shared = specfun.bessel_j(2 * l1 + p_phi + p_psi + 1.0, w) / w
        shared *= envelope * specfun.jacobi(l1, p_phi, p_psi, argument) ** 2
        for convention in NormalizationConstant:
            sums[convention] += specfun.bessel_product_constant(l1, p_phi, p_psi, convention) * shared
    squared = sums[NormalizationConstant.SQUARED]
    symmetric = sums[NormalizationConstant.SYMMETRIC]
    return IdentityCase(
        x=x,
        y=y,
        lhs=lhs,
        rhs_squared_constant=squared,
        rhs_symmetric_constant=symmetric,
        residual_squared=abs(lhs - squared) / abs(lhs),
        residual_symmetric=abs(lhs - symmetric) / abs(lhs),
        residual_doubled_argument=abs(doubled - symmetric) / abs(doubled),
    )


def identity_arbitration(
    p_phi: float,
    p_psi: float,
    pairs: Sequence[Tuple[float, float]],
    l1_max: Optional[int] = None,
    tolerance: Optional[float] = None,
) -> IdentityCheck:
    """
    Decide the expansion constant and argument scale over several (x, y) pairs.
    """
    l1_max = l1_max or config.ORACLE.IDENTITY_L1_MAX
    tolerance = tolerance or config.ORACLE.IDENTITY_TOL
    cases = [bessel_product_identity_check(p_phi, p_psi, x, y, l1_max) for x, y in pairs]
    passing = {
        NormalizationConstant.SQUARED.value: all(c.residual_squared < tolerance for c in cases),
        NormalizationConstant.SYMMETRIC.value: all(c.residual_symmetric < tolerance for c in cases),
    }
    winners = [name for name, ok in passing.items() if ok]
    if len(winners) == 1:
        winner = winners[0]
    elif len(winners) == 2 and p_phi == p_psi:
        winner = INDISTINGUISHABLE
    else:
        winner = INCONCLUSIVE

    # the doubled product is compared with the unit-scale sum, so it can only be rejected
    unit_ok = passing[NormalizationConstant.SYMMETRIC.value]
    doubled_rejected = all(c.residual_doubled_argument > tolerance for c in cases)
    scale_winner = "unit" if unit_ok and doubled_rejected else INCONCLUSIVE

    # tail decay of the better constant at the first pair
    convention = NormalizationConstant.SQUARED if winner == NormalizationConstant.SQUARED.value else NormalizationConstant.SYMMETRIC
    tail = []
    if pairs:
        x, y = pairs[0]
        for cap in sorted({1, 2, 4, 8, 16, l1_max}):
            if cap > l1_max:
                continue
            case = bessel_product_identity_check(p_phi, p_psi, x, y, cap)
            residual = case.residual_squared if convention == NormalizationConstant.SQUARED else case.residual_symmetric
            tail.append(TailPoint(l1_max=cap, residual=residual))
    logger.info("Identity arbitration: constant %s, argument scale %s", winner, scale_winner)
    return IdentityCheck(
        p_phi=p_phi,
        p_psi=p_psi,
        l1_max=l1_max,
        tolerance=tolerance,
        cases=cases,
        tail=tail,
        winner=winner,
        argument_scale_winner=scale_winner,
    )


def jacobi_argument_check(
    p_phi: float,
    p_psi: float,
    l1_max: int = 3,
    grid: Optional[GridSpec] = None,
    rtol: float = 1e-3,
) -> JacobiArgumentCheck:
    """
    Angular ODE residual of both Jacobi argument conventions.

    Each candidate eigenfunction is differentiated by central differences and
    plugged into -f'' + V f - Lambda f with Lambda from the angular oracle.
    """
    alpha = p_phi ** 2 - 0.25
    beta = p_psi ** 2 - 0.25
    params = PotentialParams(omega=1.0, alpha=max(alpha, 0.0), beta=max(beta, 0.0), k=1)
    eigenvalues = angular_eigenvalues(params.alpha, params.beta, l1_max + 1, grid)
    potential = angular_potential(params.alpha, params.beta)
    theta = np.linspace(0.15, math.pi / 2.0 - 0.15, 41)
    h = 1e-4
    residuals: Dict[str, float] = {}
    for argument in JacobiArgument:
        worst = 0.0
        for l1 in range(1, l1_max + 1):
            f = spectrum.angular_wavefunction(l1, theta, params, argument)
            f_plus = spectrum.angular_wavefunction(l1, theta + h, params, argument)
            f_minus = spectrum.angular_wavefunction(l1, theta - h, params, argument)
            second = (f_plus - 2.0 * f + f_minus) / h ** 2
            residual = -second + potential(theta) * f - eigenvalues[l1] * f
            scale = np.max(np.abs(eigenvalues[l1] * f))
            worst = max(worst, float(np.max(np.abs(residual)) / scale))
        residuals[argument.value] = worst

    ok = [name for name, value in residuals.items() if value < rtol]
    if len(ok) == 1:
        winner = ok[0]
    elif len(ok) == 2:
        winner = INDISTINGUISHABLE
    else:
        winner = INCONCLUSIVE
    logger.info("Jacobi argument check: %s (residuals %s)", winner, residuals)
    return JacobiArgumentCheck(
        p_phi=p_phi,
        p_psi=p_psi,
        l1_max=l1_max,
        residual_cos2T=residuals[JacobiArgument.COS_2T.value],
        residual_2sin2m1=residuals[JacobiArgument.TWO_SIN2_MINUS_1.value],
        winner=winner,
    )


def angular_table(
    alpha: float, beta: float, n_levels: int, grid: Optional[GridSpec] = None
) -> List[EigenvalueComparison]:
    """
    Oracle angular eigenvalues next to (2 l1 + p_phi + p_psi + 1)^2.
    """
    p_sum = math.sqrt(alpha + 0.25) + math.sqrt(beta + 0.25)
    rows = []
    for l1, value in enumerate(angular_eigenvalues(alpha, beta, n_levels, grid)):
        analytic = (2 * l1 + p_sum + 1.0) ** 2
        rows.append(EigenvalueComparison(l1=l1, oracle=value, analytic=analytic, rel_error=abs(value - analytic) / analytic))
    return rows


def validation_report(
    params: PotentialParams,
    l1_max: int = 2,
    n_levels: int = 5,
    angular_levels: int = 5,
    exponents: Optional[Tuple[float, float]] = None,
    identity_pairs: Sequence[Tuple[float, float]] = ((0.5, 1.0), (1.5, 2.0), (2.0, 4.0)),
    identity_l1_max: Optional[int] = None,
    angular_grid: Optional[GridSpec] = None,
    radial_points: Optional[int] = None,
    refinement_levels: Optional[int] = None,
) -> ValidationReport:
    """
    Run every arbitration and assemble the report.

    The spectrum is arbitrated on params; the expansion constant and the
    Jacobi argument on the arbitration exponents, which must differ to decide anything.
    """
    p_phi, p_psi = exponents or (config.ORACLE.ARBITRATION_P_PHI, config.ORACLE.ARBITRATION_P_PSI)
    arbitration = arbitrate_spectrum(params, l1_max, n_levels, angular_grid, radial_points, refinement_levels)
    identity = identity_arbitration(p_phi, p_psi, identity_pairs, identity_l1_max)
    jacobi_check = jacobi_argument_check(p_phi, p_psi, grid=angular_grid)
    return ValidationReport(
        params=params,
        angular=angular_table(params.alpha, params.beta, angular_levels, angular_grid),
        radial=arbitration.radial,
        identity=identity,
        jacobi_argument=jacobi_check,
        spectrum_max_rel_error=arbitration.max_rel_error,
        spectrum_convention_winner=arbitration.winner,
        jacobi_argument_winner=jacobi_check.winner,
        n_constant_winner=identity.winner,
        argument_scale_winner=identity.argument_scale_winner,
    )
