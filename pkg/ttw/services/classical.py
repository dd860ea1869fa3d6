"""
Classical Hamiltonian flow of the TTW potential.

H = p_r^2 + p_theta^2/r^2 + omega^2 r^2 + V(theta)/r^2 with
V = k^2 (alpha/sin^2 k theta + beta/cos^2 k theta). There are no 1/2 factors,
so dr/dt = 2 p_r and r^2 oscillates at 4 omega, the frequency of the
quantum expectation values.
"""
import logging
import math
from typing import Callable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import RK45
from scipy.optimize import brentq

from common.exceptions import DomainError, StepCollapseError
from ttw.config import config
from ttw.models import ClassicalState, ClosureReport, PotentialParams, Trajectory

logger = logging.getLogger(__name__)

COLLAPSE_FRACTION = 1e-14
# closure scales of p_r and p_theta never drop below this share of sqrt(E) and r_max sqrt(E)
MOMENTUM_SCALE_FLOOR = 1e-2


def radial_period(omega: float) -> float:
    """Period of r^2(t), pi/(2 omega)."""
    return math.pi / (2.0 * omega)


def _barrier(theta: float, params: PotentialParams) -> Tuple[float, float]:
    # V and dV/dtheta; each term only when its coefficient is non-zero
    k = params.k_float
    s = math.sin(k * theta)
    c = math.cos(k * theta)
    value = 0.0
    slope = 0.0
    if params.alpha != 0.0:
        if s == 0.0:
            raise DomainError(f"theta={theta} sits on the sin(k theta) wall")
        value += k * k * params.alpha / (s * s)
        slope -= 2.0 * k ** 3 * params.alpha * c / s ** 3
    if params.beta != 0.0:
        if c == 0.0:
            raise DomainError(f"theta={theta} sits on the cos(k theta) wall")
        value += k * k * params.beta / (c * c)
        slope += 2.0 * k ** 3 * params.beta * s / c ** 3
    return value, slope


def _in_wedge(theta: float, params: PotentialParams) -> bool:
    if params.alpha == 0.0 and params.beta == 0.0:
        return True
    return 0.0 < theta < params.theta_max


def _rhs(y: np.ndarray, params: PotentialParams) -> np.ndarray:
    r, theta, p_r, p_theta = y
    if not _in_wedge(theta, params):
        raise DomainError(f"theta={theta} outside the wedge (0, {params.theta_max})")
    v, dv = _barrier(theta, params)
    omega = params.omega
    centrifugal = p_theta * p_theta + v
    if r == 0.0 and (centrifugal != 0.0 or dv != 0.0):
        raise DomainError("the flow is singular at r = 0")
    r_sq = r * r
    return np.array([
        2.0 * p_r,
        2.0 * p_theta / r_sq if p_theta != 0.0 else 0.0,
        (2.0 * centrifugal / (r_sq * r) if centrifugal != 0.0 else 0.0) - 2.0 * omega * omega * r,
        -dv / r_sq if dv != 0.0 else 0.0,
    ])


def _energy(y: np.ndarray, params: PotentialParams) -> float:
    r, theta, p_r, p_theta = y
    v, _ = _barrier(theta, params)
    r_sq = r * r
    angular = (p_theta * p_theta + v) / r_sq if (p_theta != 0.0 or v != 0.0) else 0.0
    return p_r * p_r + angular + params.omega ** 2 * r_sq


def _charge(y: np.ndarray, params: PotentialParams) -> float:
    v, _ = _barrier(y[1], params)
    return y[3] * y[3] + v


def _check_state(s: ClassicalState, params: PotentialParams) -> np.ndarray:
    if not _in_wedge(s.theta, params):
        raise DomainError(f"theta={s.theta} outside the wedge (0, {params.theta_max})")
    return s.as_array()


def hamiltonian(s: ClassicalState, params: PotentialParams) -> float:
    """
    H = p_r^2 + p_theta^2/r^2 + omega^2 r^2 + V(theta)/r^2.

    Raises:
        DomainError: If the state sits on or outside a barrier wall
    """
    return _energy(_check_state(s, params), params)


def angular_charge(s: ClassicalState, params: PotentialParams) -> float:
    """
    A = k^2 L^2 = p_theta^2 + k^2 (alpha/sin^2 k theta + beta/cos^2 k theta).
    """
    return _charge(_check_state(s, params), params)


def flow_derivative(s: ClassicalState, params: PotentialParams) -> np.ndarray:
    """
    Hamilton's equations: (dr/dt, dtheta/dt, dp_r/dt, dp_theta/dt).

    Raises:
        DomainError: At a wall
    """
    return _rhs(_check_state(s, params), params)


def reverse_momenta(s: ClassicalState) -> ClassicalState:
    return ClassicalState(r=s.r, theta=s.theta, p_r=-s.p_r, p_theta=-s.p_theta)


def radial_parameters(s0: ClassicalState, params: PotentialParams) -> Tuple[float, float, float]:
    """
    (E, A, t0) of the closed-form r^2(t) through s0.

    r^2 = E/(2 omega^2) + C sin(4 omega (t - t0)); t0 follows from r0^2 and d(r^2)/dt = 4 r p_r at t = 0.
    """
    E = hamiltonian(s0, params)
    A = angular_charge(s0, params)
    omega = params.omega
    mean = E / (2.0 * omega * omega)
    slope = 4.0 * s0.r * s0.p_r
    t0 = -math.atan2(s0.r * s0.r - mean, slope / (4.0 * omega)) / (4.0 * omega)
    return E, A, t0


def r2_closed_form(t: np.ndarray, E: float, A: float, omega: float, t0: float) -> np.ndarray:
    mean = E / (2.0 * omega * omega)
    amplitude = math.sqrt(max(mean * mean - A / (omega * omega), 0.0))
    return mean + amplitude * np.sin(4.0 * omega * (np.asarray(t, dtype=float) - t0))


def r2_harmonicity_residual(traj: Trajectory, omega: float) -> float:
    """
    max |s'' + 16 omega^2 s - 8 E| / (8 E) over interior samples, s = r^2.

    The second derivative is the fourth-order central difference, so the
    samples must be uniformly spaced.
    """
    times = traj.times
    if len(times) < 5:
        raise DomainError("at least five samples are needed")
    steps = np.diff(times)
    h = float(steps[0])
    if not np.allclose(steps, h, rtol=1e-9, atol=0.0):
        raise DomainError("harmonicity residual needs uniformly spaced samples")
    s = traj.r2
    second = (-s[:-4] + 16.0 * s[1:-3] - 30.0 * s[2:-2] + 16.0 * s[3:-1] - s[4:]) / (12.0 * h * h)
    residual = second + 16.0 * omega * omega * s[2:-2] - 8.0 * traj.energy0
    return float(np.max(np.abs(residual)) / (8.0 * abs(traj.energy0)))


class Step(NamedTuple):
    t0: float
    t1: float
    y0: np.ndarray
    y1: np.ndarray
    dense: Callable[[float], np.ndarray]


class FlowStepper:
    """
    Accepted steps of scipy's Dormand-Prince 5(4) solver (RK45).

    Each step is yielded with its dense-output interpolant so callers can
    sample or locate events inside it. An optional projector maps every
    accepted state back onto the invariant level set before the next step.
    """

    def __init__(
        self,
        rhs: Callable[[np.ndarray], np.ndarray],
        tol: float,
        max_steps: Optional[int] = None,
        projector: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ) -> None:
        self.rhs = rhs
        self.tol = tol
        self.max_steps = max_steps or config.INTEGRATOR.MAX_STEPS
        self.projector = projector
        self.accepted = 0
        self.evaluations = 0

    def _fun(self, t: float, y: np.ndarray) -> np.ndarray:
        try:
            return self.rhs(y)
        except DomainError:
            # a stage stepped through a wall; NaN makes RK45 reject and shrink the step
            return np.full(len(y), np.nan)

    def steps(self, y0: np.ndarray, t_end: float, h0: Optional[float] = None) -> Iterator[Step]:
        """
        Yield accepted steps from t = 0 until t_end.

        Raises:
            StepCollapseError: If the step size falls below 1e-14 t_end or RK45 gives up
        """
        floor = COLLAPSE_FRACTION * t_end
        y = np.array(y0, dtype=float)
        solver = RK45(
            self._fun, 0.0, y, t_end,
            rtol=self.tol, atol=self.tol, first_step=min(h0 or 1e-3 * t_end, t_end),
        )
        while solver.status == "running":
            if self.accepted >= self.max_steps:
                raise StepCollapseError(f"exceeded {self.max_steps} steps at t={solver.t}")
            message = solver.step()
            if solver.status == "failed":
                logger.error("Step collapsed at t=%s: %s", solver.t, message)
                raise StepCollapseError(f"integration failed at t={solver.t}: {message}")
            t0, t1 = solver.t_old, solver.t
            if t1 < t_end and t1 - t0 < floor:
                logger.error("Step collapsed to %s at t=%s", t1 - t0, t0)
                raise StepCollapseError(f"step size {t1 - t0:.3e} fell below {floor:.3e} at t={t0}")
            dense = solver.dense_output()
            y1 = np.array(solver.y)
            if self.projector is not None and solver.status == "running":
                y1 = self.projector(y1)
                # restart the first-same-as-last stage from the projected state
                solver.y = y1
                solver.f = solver.fun(t1, y1)
            self.accepted += 1
            self.evaluations = solver.nfev
            yield Step(t0, t1, y, y1, dense)
            y = y1
def _invariant_projector(params: PotentialParams, E0: float, A0: float) -> Callable[[np.ndarray], np.ndarray]:
    omega_sq = params.omega ** 2

    def project(y: np.ndarray) -> np.ndarray:
        # one Gauss-Newton step onto H = E0, A = A0
        try:
            r, _, p_r, p_theta = y
            v, dv = _barrier(y[1], params)
            r_sq = r * r
            if r_sq == 0.0:
                return y
            centrifugal = p_theta * p_theta + v
            residual = np.array([_energy(y, params) - E0, centrifugal - A0])
            jacobian = np.array([
                [-2.0 * centrifugal / (r_sq * r) + 2.0 * omega_sq * r, dv / r_sq, 2.0 * p_r, 2.0 * p_theta / r_sq],
                [0.0, dv, 0.0, 2.0 * p_theta],
            ])
            gram = jacobian @ jacobian.T
            if abs(np.linalg.det(gram)) < 1e-24 * max(1.0, np.max(np.abs(gram))) ** 2:
                return y
            return y - jacobian.T @ np.linalg.solve(gram, residual)
        except (DomainError, np.linalg.LinAlgError):
            return y

    return project


def _integrator(s0: ClassicalState, params: PotentialParams, tol: Optional[float]) -> Tuple[FlowStepper, np.ndarray, float, float]:
    y0 = _check_state(s0, params)
    tol = tol if tol is not None else config.INTEGRATOR.TOL
    if not 1e-12 <= tol <= 1e-6:
        raise DomainError(f"tol must lie in [1e-12, 1e-6], got {tol}")
    E0 = _energy(y0, params)
    A0 = _charge(y0, params)
    projector = _invariant_projector(params, E0, A0) if config.INTEGRATOR.PROJECT_INVARIANTS else None
    solver = FlowStepper(lambda y: _rhs(y, params), tol, projector=projector)
    return solver, y0, E0, A0


def integrate(
    s0: ClassicalState,
    params: PotentialParams,
    t_end: float,
    tol: Optional[float] = None,
    sample_times: Optional[Sequence[float]] = None,
    n_samples: int = 201,
) -> Trajectory:
    """
    Integrate from s0 over [0, t_end] and sample by dense output.

    Args:
        s0: Initial state
        params: Potential parameters
        t_end: Final time, > 0
        tol: Local error tolerance in [1e-12, 1e-6] (TTW_INTEGRATOR_TOL when None)
        sample_times: Increasing times in [0, t_end]; n_samples uniform times when None
        n_samples: Uniform sample count when sample_times is None

    Returns:
        Trajectory with energy and angular charge per sample

    Raises:
        StepCollapseError: If the step size collapses
    """
    if not t_end > 0:
        raise DomainError(f"t_end must be positive, got {t_end}")
    solver, y0, E0, A0 = _integrator(s0, params, tol)
    times = np.linspace(0.0, t_end, n_samples) if sample_times is None else np.asarray(sample_times, dtype=float)
    if len(times) == 0 or times[0] < 0 or times[-1] > t_end:
        raise DomainError("sample times must lie in [0, t_end]")

    states = np.empty((len(times), 4))
    index = 0
    while index < len(times) and times[index] == 0.0:
        states[index] = y0
        index += 1
    for step in solver.steps(y0, t_end, h0=1e-3 * radial_period(params.omega)):
        while index < len(times) and times[index] <= step.t1:
            states[index] = step.y1 if times[index] == step.t1 else step.dense(times[index])
            index += 1
    logger.info("Integrated to t=%s in %d steps (%d evaluations)", t_end, solver.accepted, solver.evaluations)

    energies = np.array([_energy(row, params) for row in states])
    charges = np.array([_charge(row, params) for row in states])
    traj = Trajectory(
        times=times, states=states, energies=energies, angular_charges=charges, energy0=E0, angular_charge0=A0
    )
    drift = traj.energy_drift()
    if drift > 1e-9:
        logger.warning("Relative energy drift %.3e exceeds 1e-9", drift)
    return traj


def _radial_phase_section(y0: np.ndarray, params: PotentialParams, E0: float) -> Optional[Callable[[np.ndarray], Tuple[float, float]]]:
    # (sin, cos) of the radial phase relative to t = 0, scaled by the squared amplitude
    omega = params.omega
    mean = E0 / (2.0 * omega * omega)
    x0 = y0[0] * y0[2] / omega
    z0 = y0[0] * y0[0] - mean
    if math.hypot(x0, z0) <= 1e-9 * mean:
        return None

    def section(y: np.ndarray) -> Tuple[float, float]:
        x = y[0] * y[2] / omega
        z = y[0] * y[0] - mean
        return z * x0 - x * z0, x * x0 + z * z0

    return section


def closure_detect(
    s0: ClassicalState,
    params: PotentialParams,
    max_radial_periods: int = 40,
    tol: float = 1e-6,
    integrator_tol: Optional[float] = None,
) -> ClosureReport:
    """
    Smallest return time to s0 within max_radial_periods radial periods.

    Returns are taken on the section where the radial phase of r^2 equals its
    value at t = 0, crossed once per radial period. Circular orbits, whose
    radial phase is undefined, are sampled at whole radial periods. The
    distance is scaled by (r_max, pi/(2k), max |p_r|, max |p_theta|) over the
    first radial period. The momentum scales are floored at 1e-2 sqrt(E) and
    1e-2 r_max sqrt(E) so that a circular orbit, whose p_r stays at integrator
    noise, is not judged on that noise.
    """
    period = radial_period(params.omega)
    horizon = (max_radial_periods + 1) * period
    solver, y0, E0, _ = _integrator(s0, params, integrator_tol)
    section = _radial_phase_section(y0, params, E0)
    # without barriers theta is an ordinary polar angle
    free_angle = params.alpha == 0.0 and params.beta == 0.0

    peaks = np.abs(y0)
    scales: Optional[np.ndarray] = None
    pending: List[Tuple[float, np.ndarray]] = []
    best = math.inf
    crossings = 0

    for step in solver.steps(y0, horizon, h0=1e-3 * period):
        if scales is None:
            peaks = np.maximum(peaks, np.maximum(np.abs(step.y1), np.abs(step.dense(0.5 * (step.t0 + step.t1)))))
        if step.t1 > 0.5 * period:
            if section is None:
                j = math.floor(step.t0 / period) + 1
                if j * period <= step.t1:
                    pending.append((j * period, step.dense(j * period)))
            else:
                # signs from the interpolant, which the root search also uses
                g0, _ = section(step.dense(step.t0))
                g1, c1 = section(step.dense(step.t1))
                if g0 < 0.0 <= g1 and c1 > 0.0:
                    t_cross = step.t1 if g1 == 0.0 else brentq(
                        lambda t: section(step.dense(t))[0], step.t0, step.t1, xtol=1e-14, rtol=4.0 * np.finfo(float).eps
                    )
                    pending.append((t_cross, step.dense(t_cross)))
        if scales is None and step.t1 >= period:
            floor = MOMENTUM_SCALE_FLOOR * math.sqrt(E0)
            scales = np.array([
                peaks[0],
                math.pi / (2.0 * params.k_float),
                max(peaks[2], floor),
                max(peaks[3], floor * peaks[0]),
            ])
            logger.debug("Closure scales %s", scales)
        if scales is None:
            continue
        for t_cross, y in pending:
            crossings += 1
            diff = y - y0
            if free_angle:
                diff[1] = math.remainder(diff[1], 2.0 * math.pi)
            residual = float(np.linalg.norm(diff / scales))
            best = min(best, residual)
            if residual < tol and t_cross <= (max_radial_periods + 0.5) * period:
                logger.info("Orbit closes at t=%s (%s radial periods)", t_cross, t_cross / period)
                return ClosureReport(
                    closure_time=t_cross, residual=residual, best_residual=best, crossings=crossings, radial_period=period
                )
        pending = []

    logger.info("No closure within %d radial periods (best residual %.3e)", max_radial_periods, best)
    return ClosureReport(closure_time=None, residual=None, best_residual=best, crossings=crossings, radial_period=period)
