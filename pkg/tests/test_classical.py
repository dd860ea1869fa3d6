"""
Tests for the classical flow, the integrator and closure detection.
"""
import math

import numpy as np
import pytest

from common.exceptions import DomainError, StepCollapseError
from common.models import ClassicalState, PotentialParams
from ttw.services import classical


def _state(r=1.0, theta=math.pi / 4, p_r=0.0, p_theta=0.0):
    return ClassicalState(r=r, theta=theta, p_r=p_r, p_theta=p_theta)


def _scaled_distance(a: ClassicalState, b: ClassicalState) -> float:
    diff = a.as_array() - b.as_array()
    scale = np.maximum(np.abs(b.as_array()), 1.0)
    return float(np.linalg.norm(diff / scale))


def test_hamiltonian_examples(isotropic):
    assert classical.hamiltonian(_state(), isotropic) == pytest.approx(1.0)
    assert classical.hamiltonian(_state(), PotentialParams(alpha=1, beta=1)) == pytest.approx(5.0)
    assert classical.hamiltonian(_state(theta=math.pi / 8), PotentialParams(alpha=1, beta=0, k=2)) == pytest.approx(9.0)


def test_angular_charge_examples(isotropic):
    assert classical.angular_charge(_state(p_theta=2.0), isotropic) == pytest.approx(4.0)
    params = PotentialParams(alpha=1, beta=1, k="3/2")
    midpoint = math.pi / (4 * params.k_float)
    assert classical.angular_charge(_state(theta=midpoint), params) == pytest.approx(4.0 * 2.25)


def test_wall_states_rejected(wedge):
    with pytest.raises(DomainError):
        classical.hamiltonian(_state(theta=0.0), wedge)
    with pytest.raises(DomainError):
        classical.flow_derivative(_state(theta=wedge.theta_max + 0.1), wedge)


def test_free_angle_allows_any_theta(isotropic):
    assert classical.hamiltonian(_state(theta=4.0), isotropic) == pytest.approx(1.0)


def test_flow_central_force(isotropic):
    derivative = classical.flow_derivative(_state(r=1.3, theta=0.7, p_r=0.2, p_theta=0.5), isotropic)
    assert derivative[0] == pytest.approx(0.4)
    assert derivative[1] == pytest.approx(1.0 / 1.69)
    assert derivative[3] == 0.0


def test_flow_symmetric_midpoint():
    params = PotentialParams(alpha=1.5, beta=1.5, k=2)
    derivative = classical.flow_derivative(_state(theta=math.pi / 8, p_theta=0.3), params)
    assert derivative[3] == pytest.approx(0.0, abs=1e-12)


def _circular_state():
    # alpha = beta = 1, k = 1: V = 4 at the midpoint, A = 5, r^4 = A
    return _state(r=5.0 ** 0.25, theta=math.pi / 4, p_r=0.0, p_theta=1.0)


def test_flow_circular_configuration():
    params = PotentialParams(alpha=1, beta=1)
    s = _circular_state()
    assert classical.angular_charge(s, params) == pytest.approx(5.0)
    derivative = classical.flow_derivative(s, params)
    assert derivative[0] == 0.0
    assert derivative[2] == pytest.approx(0.0, abs=1e-12)


def test_radial_line_period(isotropic):
    s0 = _state(r=1.2, theta=0.5, p_r=0.4, p_theta=0.0)
    period = classical.radial_period(1.0)
    traj = classical.integrate(s0, isotropic, period, tol=1e-10, sample_times=[0.0, period])
    assert traj.r2[-1] == pytest.approx(traj.r2[0], abs=1e-8)
    assert traj.states[-1, 1] == pytest.approx(0.5, abs=1e-9)


def test_conservation_over_many_periods(wedge):
    s0 = _state(r=1.1, theta=0.6, p_r=0.35, p_theta=0.4)
    t_end = 100 * classical.radial_period(wedge.omega)
    traj = classical.integrate(s0, wedge, t_end, tol=1e-10, n_samples=1001)
    assert traj.energy_drift() < 1e-9
    assert traj.angular_charge_drift() < 1e-9
    assert np.all(np.diff(traj.times) > 0)


def test_closed_form_r2(barriers):
    s0 = _state(r=1.0, theta=0.5, p_r=0.6, p_theta=-0.3)
    E, A, t0 = classical.radial_parameters(s0, barriers)
    traj = classical.integrate(s0, barriers, 3 * classical.radial_period(barriers.omega), tol=1e-10, n_samples=301)
    expected = classical.r2_closed_form(traj.times, E, A, barriers.omega, t0)
    np.testing.assert_allclose(traj.r2, expected, atol=1e-6)
    assert expected[0] == pytest.approx(s0.r ** 2, abs=1e-12)


def test_r2_harmonicity(wedge):
    s0 = _state(r=0.9, theta=0.8, p_r=-0.2, p_theta=0.7)
    traj = classical.integrate(s0, wedge, 2 * classical.radial_period(wedge.omega), tol=1e-10, n_samples=801)
    assert classical.r2_harmonicity_residual(traj, wedge.omega) <= 1e-5


def test_harmonicity_needs_uniform_samples(wedge):
    s0 = _state(r=0.9, theta=0.8, p_r=-0.2, p_theta=0.7)
    traj = classical.integrate(s0, wedge, 1.0, sample_times=[0.0, 0.1, 0.3, 0.35, 0.6, 1.0])
    with pytest.raises(DomainError):
        classical.r2_harmonicity_residual(traj, wedge.omega)


def test_time_reversal(barriers):
    s0 = _state(r=1.0, theta=0.45, p_r=0.3, p_theta=0.2)
    t_end = 1.7
    forward = classical.integrate(s0, barriers, t_end, tol=1e-11, sample_times=[t_end])
    _, end = next(iter(forward.samples()))
    back = classical.integrate(classical.reverse_momenta(end), barriers, t_end, tol=1e-11, sample_times=[t_end])
    _, returned = next(iter(back.samples()))
    assert _scaled_distance(classical.reverse_momenta(returned), s0) < 1e-7


def test_integrate_rejects_bad_arguments(wedge):
    s0 = _state()
    with pytest.raises(DomainError):
        classical.integrate(s0, wedge, 1.0, tol=1e-3)
    with pytest.raises(DomainError):
        classical.integrate(s0, wedge, -1.0)
    with pytest.raises(DomainError):
        classical.integrate(s0, wedge, 1.0, sample_times=[0.0, 2.0])


def test_step_collapse_on_blow_up():
    solver = classical.FlowStepper(lambda y: y * y, tol=1e-10)
    with pytest.raises(StepCollapseError):
        for _ in solver.steps(np.array([1.0]), 2.0):
            pass


def test_stepper_exponential():
    solver = classical.FlowStepper(lambda y: -y, tol=1e-10)
    last = None
    for step in solver.steps(np.array([1.0]), 3.0):
        mid = 0.5 * (step.t0 + step.t1)
        assert step.dense(mid)[0] == pytest.approx(math.exp(-mid), rel=1e-7)
        np.testing.assert_allclose(step.dense(step.t1), step.y1, rtol=1e-12, atol=1e-15)
        last = step
    assert last.t1 == 3.0
    assert last.y1[0] == pytest.approx(math.exp(-3.0), rel=1e-7)
    assert solver.accepted > 0
    assert solver.evaluations >= 6 * solver.accepted


def test_stepper_projection_restarts_from_projected_state():
    # y = (x, v) on the unit circle; the projector renormalizes every step
    solver = classical.FlowStepper(
        lambda y: np.array([y[1], -y[0]]), tol=1e-8, projector=lambda y: y / np.linalg.norm(y)
    )
    previous = None
    for step in solver.steps(np.array([1.0, 0.0]), 2.0 * math.pi):
        if previous is not None:
            np.testing.assert_array_equal(step.y0, previous.y1)
        if step.t1 < 2.0 * math.pi:
            assert np.linalg.norm(step.y1) == pytest.approx(1.0, abs=1e-15)
        previous = step
    assert previous.y1[0] == pytest.approx(1.0, abs=1e-6)


def test_stepper_rejects_stages_past_a_wall():
    def rhs(y):
        if y[0] >= 1.0:
            raise DomainError("past the wall")
        return 1.0 - y

    solver = classical.FlowStepper(rhs, tol=1e-10)
    last = None
    for last in solver.steps(np.array([0.0]), 10.0, h0=5.0):
        assert last.y1[0] < 1.0
    assert last.t1 == 10.0
    assert last.y1[0] == pytest.approx(1.0 - math.exp(-10.0), rel=1e-9)


@pytest.mark.parametrize("k, q", [("1", 1), ("2", 1), ("3", 1), ("3/2", 2), ("5/2", 2)])
def test_rational_k_closes(k, q):
    params = PotentialParams(alpha=1.0, beta=0.5, k=k)
    s0 = _state(r=1.0, theta=0.4 * params.theta_max, p_r=0.3, p_theta=0.25)
    report = classical.closure_detect(s0, params, max_radial_periods=2 * q + 2, tol=1e-6)
    assert report.closure_time is not None
    assert report.residual < 1e-6
    assert report.closure_time <= (q + 0.5) * report.radial_period


def test_isotropic_ellipse_closes():
    params = PotentialParams()
    s0 = _state(r=1.0, theta=0.3, p_r=0.4, p_theta=0.6)
    report = classical.closure_detect(s0, params, max_radial_periods=4, tol=1e-6)
    assert report.closure_time is not None
    # r^2 repeats every radial period, the full state every two
    assert report.closure_time == pytest.approx(2 * report.radial_period, rel=1e-6)
    assert report.residual < 1e-6
    assert report.crossings == 2


def test_circular_orbit_closes():
    params = PotentialParams(alpha=1, beta=1)
    report = classical.closure_detect(_circular_state(), params, max_radial_periods=6, tol=1e-6)
    assert report.closure_time is not None
    # p_r stays at integrator noise; its scale must not be that noise
    assert report.closure_time == pytest.approx(report.radial_period, rel=1e-12)
    assert report.residual < 1e-6
    assert report.crossings == 1


@pytest.mark.parametrize("k", ["7072135/5000000", "14142135/10000000"])
def test_irrational_surrogate_does_not_close(k):
    params = PotentialParams(alpha=1.0, beta=0.5, k=k)
    s0 = _state(r=1.0, theta=0.4 * params.theta_max, p_r=0.3, p_theta=0.25)
    report = classical.closure_detect(s0, params, max_radial_periods=40, tol=1e-6)
    assert report.closure_time is None
    assert report.residual is None
    assert report.best_residual > 1e-6
    assert report.crossings >= 39
