"""
Conserved-charge coherent states.

The four oscillator amplitudes (kappa1, kappa2) for the u-plane and
(lambda1, lambda2) for the v-plane evolve as exp(-2 i omega t). Fixing the
plane angular momenta to L12 = k p_phi and L34 = k p_psi projects the
oscillator coherent state onto the TTW eigenstates; the result is a double
series over (l1, n_r) evaluated here from a precomputed coefficient table.
"""
import cmath
import logging
import math
from functools import lru_cache
from typing import List, Optional, Tuple, Union

import numpy as np

from common.exceptions import (
    ConstraintViolationError,
    DomainError,
    InfeasibleChargesError,
    TruncationError,
)
from common.models import JacobiArgument, SpectrumConvention
from ttw.config import config
from ttw.models import (
    ClassicalState,
    CoherentEvaluation,
    ConservedCharges,
    OscillatorAmplitudes,
    PotentialParams,
    QuantumNumbers,
    SeriesTruncation,
)
from ttw.services import specfun, spectrum

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

CONSTRAINT_TOL = 1e-10


def evolve(a: OscillatorAmplitudes, t: float) -> OscillatorAmplitudes:
    """
    Amplitudes at time t: every amplitude picks up exp(-2 i omega t).
    """
    phase = cmath.exp(-2j * a.omega * t)
    return OscillatorAmplitudes(
        kappa1=a.kappa1 * phase,
        kappa2=a.kappa2 * phase,
        lambda1=a.lambda1 * phase,
        lambda2=a.lambda2 * phase,
        omega=a.omega,
    )


def _ratio_root(first: complex, second: complex, label: str) -> Optional[complex]:
    # sqrt((second + i first) / (second - i first)), None on a vanishing denominator
    denominator = second - 1j * first
    if abs(denominator) == 0.0:
        logger.warning("%s undefined: denominator vanishes", label)
        return None
    return cmath.sqrt((second + 1j * first) / denominator)


def charges_from_amplitudes(a: OscillatorAmplitudes) -> ConservedCharges:
    """
    Conserved charges of a set of amplitudes.

    Args:
        a: Amplitudes

    Returns:
        L12 = -Im(kappa1 conj(kappa2)), L34 likewise, energy_over_omega = sum |amp|^2 / 2,
        the squared combinations, delta from cot(2 delta) = Im/Re of kappa1^2 + kappa2^2,
        and the ratios K0, Lambda0 (None when undefined)
    """
    k1, k2, l1, l2 = a.kappa1, a.kappa2, a.lambda1, a.lambda2
    L12 = (-(k1 * k2.conjugate() - k2 * k1.conjugate()) / 2j).real
    L34 = (-(l1 * l2.conjugate() - l2 * l1.conjugate()) / 2j).real
    total = abs(k1) ** 2 + abs(k2) ** 2 + abs(l1) ** 2 + abs(l2) ** 2
    kappa_plane = k1 * k1 + k2 * k2
    lambda_plane = l1 * l1 + l2 * l2
    return ConservedCharges(
        L12=L12,
        L34=L34,
        energy_over_omega=total / 2.0,
        kappa_sq=kappa_plane + lambda_plane,
        kappa_plane_sq=kappa_plane,
        lambda_plane_sq=lambda_plane,
        delta=0.5 * math.atan2(kappa_plane.real, kappa_plane.imag),
        K0=_ratio_root(k1, k2, "K0"),
        Lambda0=_ratio_root(l1, l2, "Lambda0"),
    )


def constrain_amplitudes(
    E_target: float,
    params: PotentialParams,
    phase_u: float = 0.0,
    phase_v: float = 0.0,
    split: float = 0.5,
) -> OscillatorAmplitudes:
    """
    Build amplitudes with L12 = k p_phi, L34 = k p_psi and energy_over_omega = E_target/omega.

    Each plane gets equal moduli; the phase difference inside a plane is the
    one the angular-momentum equation demands, centred on phase_u / phase_v.

    Args:
        E_target: Target energy
        params: Potential parameters
        phase_u: Mean phase of the kappa pair
        phase_v: Mean phase of the lambda pair
        split: Share of the energy carried by the u-plane, in (0, 1)

    Returns:
        Amplitudes at t = 0

    Raises:
        InfeasibleChargesError: If either plane cannot carry its angular momentum
    """
    if not 0.0 < split < 1.0:
        raise DomainError(f"split must lie in (0, 1), got {split!r}")
    omega = params.omega
    k = params.k_float
    targets = (k * params.p_phi, k * params.p_psi)
    shares = (split, 1.0 - split)
    minimal = max(t * omega / s for t, s in zip(targets, shares))
    if E_target < minimal * (1.0 - 1e-15):
        logger.error("Charges infeasible at E=%s; minimum is %s", E_target, minimal)
        raise InfeasibleChargesError(
            f"energy {E_target} cannot carry L12={targets[0]}, L34={targets[1]} with split {split}; "
            f"minimal feasible energy is {minimal}",
            minimal_energy=minimal,
        )
    pairs = []
    for target, share, phase in zip(targets, shares, (phase_u, phase_v)):
        m_sq = share * E_target / omega
        gap = math.asin(min(1.0, target / m_sq))
        modulus = math.sqrt(m_sq)
        pairs.append((cmath.rect(modulus, phase - gap / 2.0), cmath.rect(modulus, phase + gap / 2.0)))
    (k1, k2), (l1, l2) = pairs
    return OscillatorAmplitudes(kappa1=k1, kappa2=k2, lambda1=l1, lambda2=l2, omega=omega)


def _check_constraint(L: float, barrier: float, k: float, label: str) -> float:
    target = k * k * (barrier + 0.25)
    if abs(L * L - target) > CONSTRAINT_TOL * max(1.0, target):
        raise ConstraintViolationError(f"{label}^2 = {L * L} but k^2 (barrier + 1/4) = {target}")
    return target


def _plane_expectation(first: complex, second: complex, omega: float, t: float, target: float) -> float:
    total = abs(first) ** 2 + abs(second) ** 2
    bracket = max(total * total / 4.0 - target, 0.0)
    phase = cmath.phase(first * first + second * second)
    return total / 2.0 + math.sqrt(bracket) * math.cos(4.0 * omega * t - phase)


def expectation_u2(a: OscillatorAmplitudes, t: float, alpha: float, k: float = 1.0) -> float:
    """
    <u>^2_t = (|k1|^2+|k2|^2)/2 + [(|k1|^2+|k2|^2)^2/4 - k^2(alpha+1/4)]^(1/2) cos(4 omega t - 2 phi).

    Raises:
        ConstraintViolationError: If L12^2 differs from k^2 (alpha + 1/4)
    """
    target = _check_constraint(charges_from_amplitudes(a).L12, alpha, float(k), "L12")
    return _plane_expectation(a.kappa1, a.kappa2, a.omega, t, target)


def expectation_v2(a: OscillatorAmplitudes, t: float, beta: float, k: float = 1.0) -> float:
    """
    Mirror of expectation_u2 for the lambda pair and beta.
    """
    target = _check_constraint(charges_from_amplitudes(a).L34, beta, float(k), "L34")
    return _plane_expectation(a.lambda1, a.lambda2, a.omega, t, target)


def expectation_r2(E: float, A: float, omega: float, t: float, t0: float) -> float:
    """
    <r>^2_t = E/(2 omega^2) + [(E/(2 omega^2))^2 - A/omega^2]^(1/2) sin(4 omega (t - t0)).

    Args:
        E: Energy (value of the Hamiltonian)
        A: Angular charge k^2 L^2
        omega: Trap frequency
        t: Time
        t0: Phase reference

    Returns:
        The mean square radius

    Raises:
        DomainError: If the radicand is negative
    """
    mean = E / (2.0 * omega * omega)
    radicand = mean * mean - A / (omega * omega)
    if radicand < 0.0:
        if radicand < -1e-12 * mean * mean:
            raise DomainError(f"unphysical charges: radicand {radicand} < 0 (E={E}, A={A})")
        radicand = 0.0
    return mean + math.sqrt(radicand) * math.sin(4.0 * omega * (t - t0))


def radial_parameters_from_amplitudes(a: OscillatorAmplitudes) -> Tuple[float, float, float]:
    """
    (E, A, t0) of the mean-square radius carried by a set of amplitudes.

    E = omega * sum |amp|^2, A = (S^2 - |sigma^2|^2)/4 with S = sum |amp|^2 and
    sigma^2 = kappa1^2 + kappa2^2 + lambda1^2 + lambda2^2, t0 = (arg sigma^2 - pi/2)/(4 omega).
    """
    charges = charges_from_amplitudes(a)
    total = 2.0 * charges.energy_over_omega
    sigma_sq = charges.kappa_sq
    E = a.omega * total
    A = (total * total - abs(sigma_sq) ** 2) / 4.0
    t0 = (cmath.phase(sigma_sq) - math.pi / 2.0) / (4.0 * a.omega)
    return E, A, t0


def expectation_sin2_theta(a: OscillatorAmplitudes, params: PotentialParams, t: float) -> float:
    """
    <sin^2 k theta>_t as <u>^2_t / (omega <r>^2_t) with the k-scaled charge constraints.

    Raises:
        DomainError: If the mean square radius vanishes
    """
    k = params.k_float
    u2 = expectation_u2(a, t, params.alpha, k)
    expectation_v2(a, t, params.beta, k)
    E, A, t0 = radial_parameters_from_amplitudes(a)
    r2 = expectation_r2(E, A, a.omega, t, t0)
    if r2 <= 0.0:
        raise DomainError("mean square radius vanishes")
    return u2 / (a.omega * r2)


def expectation_components(a: OscillatorAmplitudes, t: float) -> np.ndarray:
    """
    <u1>, <u2>, <v1>, <v2> at time t: |amp| cos(2 omega t - phase).
    """
    return evolve(a, t).as_array().real


def classical_params_from_amplitudes(a: OscillatorAmplitudes) -> PotentialParams:
    """
    k = 1 potential whose barriers equal the plane angular momenta squared.
    """
    charges = charges_from_amplitudes(a)
    return PotentialParams(omega=a.omega, alpha=charges.L12 ** 2, beta=charges.L34 ** 2, k=1)


def classical_state_from_amplitudes(a: OscillatorAmplitudes) -> ClassicalState:
    """
    Phase-space point whose k = 1 trajectory is the coherent-state centre.

    Oscillator coordinates q = Re(amp)/sqrt(omega), p = sqrt(omega) Im(amp);
    each plane reduces to its radius, the u-plane radius giving r sin(theta).
    """
    values = a.as_array()
    root = math.sqrt(a.omega)
    q = values.real / root
    p = values.imag * root
    rho_u = math.hypot(q[0], q[1])
    rho_v = math.hypot(q[2], q[3])
    if rho_u == 0.0 or rho_v == 0.0:
        raise DomainError("both oscillator planes need a non-zero initial radius")
    p_u = (q[0] * p[0] + q[1] * p[1]) / rho_u
    p_v = (q[2] * p[2] + q[3] * p[3]) / rho_v
    r = math.hypot(rho_u, rho_v)
    return ClassicalState(
        r=r,
        theta=math.atan2(rho_u, rho_v),
        p_r=(rho_v * p_v + rho_u * p_u) / r,
        p_theta=rho_v * p_u - rho_u * p_v,
    )


def _complex_power(base: complex, exponent: float) -> complex:
    if base == 0:
        return 0j if exponent > 0 else 1.0 + 0j
    return cmath.exp(exponent * cmath.log(base))


def _homogeneous_jacobi(l1: int, a: float, b: float, minus_side: complex, plus_side: complex) -> complex:
    # sigma^(2l) P_l^(a,b)(x) with sigma^2 (x - 1)/2 = minus_side and sigma^2 (x + 1)/2 = plus_side
    top = specfun.log_gamma_real(l1 + a + 1.0) + specfun.log_gamma_real(l1 + b + 1.0)
    total = 0j
    for s in range(l1 + 1):
        coeff = math.exp(
            top
            - math.lgamma(s + 1.0)
            - math.lgamma(l1 - s + 1.0)
            - specfun.log_gamma_real(a + s + 1.0)
            - specfun.log_gamma_real(b + l1 - s + 1.0)
        )
        total += coeff * minus_side ** s * plus_side ** (l1 - s)
    return total


class CoherentState:
    """
    Truncated coherent-state series for fixed amplitudes, parameters and truncation.

    Coefficients are stored in the orthonormal eigenbasis; the overall constant
    is fixed by quadrature of the truncated state.
    """

    def __init__(
        self,
        amplitudes: OscillatorAmplitudes,
        params: PotentialParams,
        truncation: Optional[SeriesTruncation] = None,
        convention: Optional[SpectrumConvention] = None,
        order: Optional[int] = None,
    ) -> None:
        """
        Build the coefficient table and normalize it.

        Raises:
            DomainError: If kappa^2 + lambda^2 vanishes while k != 1
            TruncationError: If the last retained l1 or n_r shell is above tail_tol
        """
        self.amplitudes = amplitudes
        self.params = params
        self.truncation = truncation or SeriesTruncation(
            l1_max=config.SERIES.L1_MAX, nr_max=config.SERIES.NR_MAX, tail_tol=config.SERIES.TAIL_TOL
        )
        self.convention = convention or spectrum.default_convention()
        self.order = order or config.SPECTRUM.QUADRATURE_ORDER
        self.n_constant = spectrum.default_n_constant()
        self.argument = spectrum.default_jacobi_argument()

        L = self.truncation.l1_max
        N = self.truncation.nr_max
        self.lams = np.array([spectrum.radial_index(l1, params) for l1 in range(L + 1)])
        self.energies = np.array(
            [[spectrum.energy(QuantumNumbers(n_r=n, l1=l1), params, self.convention) for n in range(N + 1)]
             for l1 in range(L + 1)]
        )
        angular = np.array([spectrum.angular_basis_on_rule(l1, params, self.order) for l1 in range(L + 1)])
        self._angular_norms = np.sqrt(np.sum(angular ** 2, axis=1))
        self._angular_rules = angular / self._angular_norms[:, None]
        self._radial_rules = np.array([[self._radial_rule(l1, n) for n in range(N + 1)] for l1 in range(L + 1)])
        self.raw = self._basis_coefficients()
        self.normalization = 1.0 / math.sqrt(self._norm_squared_on_rule(self.raw))
        self.coefficients0 = self.normalization * self.raw

        total = float(np.sum(np.abs(self.coefficients0) ** 2))
        self.last_shell_magnitude = float(math.sqrt(np.sum(np.abs(self.coefficients0[L]) ** 2)))
        self.last_radial_magnitude = float(math.sqrt(np.sum(np.abs(self.coefficients0[:, N]) ** 2)))
        self.partial_norm = math.sqrt(total)
        logger.debug(
            "Coherent series: N=%s, shell tails l1=%s n_r=%s",
            self.normalization, self.last_shell_magnitude, self.last_radial_magnitude,
        )
        limit = self.truncation.tail_tol * self.partial_norm
        if self.last_shell_magnitude > limit or self.last_radial_magnitude > limit:
            logger.error("Coherent series truncated too early (tails %s, %s)",
                         self.last_shell_magnitude, self.last_radial_magnitude)
            raise TruncationError(
                f"last shells {self.last_shell_magnitude:.3e} (l1) / {self.last_radial_magnitude:.3e} (n_r) "
                f"exceed tail_tol x norm = {limit:.3e}; raise l1_max / nr_max"
            )

    def _basis_coefficients(self) -> np.ndarray:
        params = self.params
        a, b = params.p_phi, params.p_psi
        k = params.k_float
        charges = charges_from_amplitudes(self.amplitudes)
        y0 = -charges.kappa_sq / 4.0
        if y0 == 0 and k != 1.0:
            raise DomainError("kappa^2 + lambda^2 = 0 only admits k = 1")
        amp = self.amplitudes
        prefactor = _complex_power(amp.kappa2 + 1j * amp.kappa1, a) * _complex_power(amp.lambda2 + 1j * amp.lambda1, b)
        kappa_sq, lambda_sq = charges.kappa_plane_sq, charges.lambda_plane_sq
        if self.argument == JacobiArgument.COS_2T:
            minus_side, plus_side = -kappa_sq, lambda_sq
        else:
            minus_side, plus_side = -lambda_sq, kappa_sq
        log_y0 = cmath.log(y0) if y0 != 0 else None
        log_two_omega = math.log(2.0 * params.omega)

        L = self.truncation.l1_max
        N = self.truncation.nr_max
        table = np.zeros((L + 1, N + 1), dtype=complex)
        for l1 in range(L + 1):
            shell = specfun.bessel_product_constant(l1, a, b, self.n_constant) * (-0.25) ** l1
            shell *= prefactor * _homogeneous_jacobi(l1, a, b, minus_side, plus_side)
            if shell == 0:
                continue
            nu_k = self.lams[l1]
            nu = nu_k / k
            for n in range(N + 1):
                log_norm = 0.5 * (specfun.log_gamma_real(n + nu_k + 1.0) - math.lgamma(n + 1.0) - log_two_omega)
                if log_y0 is None:
                    if n > 0:
                        break
                    log_power = 0.0
                else:
                    log_power = ((k - 1.0) * nu / 2.0 + n) * log_y0
                table[l1, n] = shell * self._angular_norms[l1] * cmath.exp(
                    log_power - specfun.log_gamma_real(n + nu_k + 1.0) + log_norm
                )
        return table

    def _radial_rule(self, l1: int, n_r: int) -> np.ndarray:
        lam = self.lams[l1]
        vector = spectrum.radial_basis_on_rule(n_r, lam, self.order)
        return vector / math.sqrt(2.0 * self.params.omega * spectrum.radial_norm_closed_form(n_r, lam, self.params.omega))

    def _values_on_rule(self, coefficients: np.ndarray) -> np.ndarray:
        # rows: Gauss-Laguerre nodes, columns: Gauss-Legendre nodes; weights folded in
        radial = np.einsum("ln,lni->li", coefficients, self._radial_rules)
        return radial.T @ self._angular_rules

    def _norm_squared_on_rule(self, coefficients: np.ndarray) -> float:
        return float(np.sum(np.abs(self._values_on_rule(coefficients)) ** 2))

    def coefficients(self, t: float = 0.0) -> np.ndarray:
        """
        Coefficients in the orthonormal eigenbasis at time t, indexed [l1, n_r].
        """
        return self.coefficients0 * np.exp(-1j * self.energies * t)

    def coefficient_rows(self) -> List[Tuple[int, int, float, float]]:
        rows = []
        for l1 in range(self.coefficients0.shape[0]):
            for n in range(self.coefficients0.shape[1]):
                value = self.coefficients0[l1, n]
                rows.append((l1, n, float(value.real), float(value.imag)))
        return rows

    def evaluate(self, t: float, r: ArrayLike, theta: ArrayLike) -> np.ndarray:
        """
        Complex amplitude at (r, theta); the arguments broadcast.
        """
        r, theta = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(theta, dtype=float))
        flat_r, flat_theta = r.ravel(), theta.ravel()
        coefficients = self.coefficients(t)
        total = np.zeros(flat_r.shape, dtype=complex)
        omega = self.params.omega
        for l1 in range(coefficients.shape[0]):
            if not np.any(coefficients[l1]):
                continue
            lam = self.lams[l1]
            radial = np.zeros(flat_r.shape, dtype=complex)
            for n in range(coefficients.shape[1]):
                if coefficients[l1, n] == 0:
                    continue
                scale = math.sqrt(spectrum.radial_norm_closed_form(n, lam, omega))
                radial += coefficients[l1, n] * spectrum.radial_factor(n, l1, self.params, flat_r) / scale
            angular = spectrum.angular_wavefunction(l1, flat_theta, self.params) / self._angular_norms[l1]
            total += radial * angular
        return total.reshape(r.shape)

    def density(self, t: float, r: ArrayLike, theta: ArrayLike) -> np.ndarray:
        return np.abs(self.evaluate(t, r, theta)) ** 2

    def norm_on_rule(self, t: float = 0.0) -> float:
        return self._norm_squared_on_rule(self.coefficients(t))

    def expectation_r2_series(self, t: float) -> float:
        """
        <r^2> of the truncated state by quadrature.
        """
        nodes, _ = spectrum.laguerre_rule(self.order)
        density = np.abs(self._values_on_rule(self.coefficients(t))) ** 2
        return float(np.sum(density * (nodes / self.params.omega)[:, None]))

    def project(self, qn: QuantumNumbers, t: float = 0.0) -> complex:
        """
        Quadrature inner product of the normalized eigenstate qn with the state.
        """
        if qn.l1 >= self.coefficients0.shape[0]:
            return 0j
        values = self._values_on_rule(self.coefficients(t))
        lam = self.lams[qn.l1]
        vector = spectrum.radial_basis_on_rule(qn.n_r, lam, self.order)
        vector = vector / math.sqrt(np.sum(vector ** 2))
        angular = spectrum.angular_basis_on_rule(qn.l1, self.params, self.order)
        angular = angular / math.sqrt(np.sum(angular ** 2))
        return complex(vector @ values @ angular)


@lru_cache(maxsize=8)
def _cached_state(a: OscillatorAmplitudes, params: PotentialParams, trunc: SeriesTruncation) -> CoherentState:
    return CoherentState(a, params, trunc)


def coherent_eval(
    a: OscillatorAmplitudes,
    params: PotentialParams,
    t: float,
    r: float,
    theta: float,
    trunc: SeriesTruncation,
) -> CoherentEvaluation:
    """
    Coherent-state amplitude at one point.

    The coefficient table is built once per (amplitudes, params, truncation).

    Raises:
        TruncationError: If the truncation leaves too large a tail
    """
    state = _cached_state(a, params, trunc)
    value = complex(state.evaluate(t, r, theta))
    return CoherentEvaluation(
        value=value,
        last_shell_magnitude=state.last_shell_magnitude,
        partial_norm=state.partial_norm,
        last_radial_magnitude=state.last_radial_magnitude,
    )
