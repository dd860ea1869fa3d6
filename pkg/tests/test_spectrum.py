"""
Tests for eigenvalues, eigenstates and degeneracy enumeration.
"""
import math
from fractions import Fraction

import numpy as np
import pytest

from common.exceptions import ConfigError, DomainError, QuadratureError
from common.models import JacobiArgument, PotentialParams, QuantumNumbers, SpectrumConvention
from ttw.config import config
from ttw.services import spectrum


def _qn(n_r, l1):
    return QuantumNumbers(n_r=n_r, l1=l1)


def _sign_changes(values):
    signs = np.sign(values[np.abs(values) > 1e-12 * np.max(np.abs(values))])
    return int(np.count_nonzero(signs[1:] != signs[:-1]))


def test_exponent_pair():
    assert spectrum.angular_exponent_pair(PotentialParams()) == (0.5, 0.5)
    assert spectrum.angular_exponent_pair(PotentialParams(alpha=2, beta=0.75)) == (1.5, 1.0)
    p_phi, p_psi = spectrum.angular_exponent_pair(PotentialParams(alpha=1, beta=1))
    assert p_phi == pytest.approx(1.118033988, abs=1e-9)
    assert p_psi == pytest.approx(p_phi)


def test_exact_exponents():
    assert spectrum.exact_exponent_pair(PotentialParams(alpha=2, beta=0.75)) == (Fraction(3, 2), Fraction(1))
    assert spectrum.exact_exponent_pair(PotentialParams(alpha=1, beta=0)) is None


def test_energy_conventions(isotropic):
    literal = SpectrumConvention.PAPER_EQ_E
    resolved = SpectrumConvention.RESOLVED
    assert spectrum.energy(_qn(0, 0), isotropic, literal) == pytest.approx(4.0)
    assert spectrum.energy(_qn(1, 0), PotentialParams(k="3"), literal) == pytest.approx(14.0)
    assert spectrum.energy(_qn(0, 0), isotropic, resolved) == pytest.approx(6.0)
    assert spectrum.energy(_qn(0, 0), isotropic) == pytest.approx(6.0)


def test_energy_monotone(barriers):
    for convention in SpectrumConvention:
        for n_r in range(5):
            for l1 in range(5):
                e = spectrum.energy(_qn(n_r, l1), barriers, convention)
                assert spectrum.energy(_qn(n_r + 1, l1), barriers, convention) > e
                assert spectrum.energy(_qn(n_r, l1 + 1), barriers, convention) > e


def test_bad_convention_in_config(monkeypatch, isotropic):
    monkeypatch.setattr(config.SPECTRUM, "CONVENTION", "Unknown")
    with pytest.raises(ConfigError):
        spectrum.energy(_qn(0, 0), isotropic)


def test_bad_n_constant_in_config(monkeypatch):
    monkeypatch.setattr(config.SPECTRUM, "N_CONSTANT", "bogus")
    with pytest.raises(ConfigError):
        spectrum.default_n_constant()


def test_isotropic_degeneracy_pattern(isotropic):
    classes = spectrum.enumerate_levels(isotropic, 20.0)
    assert [c.energy for c in classes] == [6.0, 10.0, 14.0, 18.0]
    assert [c.size for c in classes] == [1, 2, 3, 4]
    assert sum(c.size for c in classes) == 10
    assert [c.class_id for c in classes] == [0, 1, 2, 3]
    for c in classes:
        assert [lv.qn.n_r for lv in c.levels] == sorted(lv.qn.n_r for lv in c.levels)
        assert all(lv.energy_exact == Fraction(int(c.energy)) for lv in c.levels)


def test_empty_below_ground(isotropic):
    assert spectrum.enumerate_levels(isotropic, 5.0) == []


def test_non_finite_ceiling(isotropic):
    with pytest.raises(DomainError):
        spectrum.enumerate_levels(isotropic, float("inf"))


def test_three_halves_shift():
    params = PotentialParams(k="3/2")
    classes = spectrum.enumerate_levels(params, 60.0)
    assert any(c.size >= 2 for c in classes)
    for c in classes:
        for lv in c.levels:
            # E = 4 n_r + 6 l1 + 8
            assert lv.energy_exact == 4 * lv.qn.n_r + 6 * lv.qn.l1 + 8
            n_r, l1 = lv.qn.n_r + 3, lv.qn.l1 - 2
            if l1 >= 0:
                assert spectrum.energy_exact(_qn(n_r, l1), params) == lv.energy_exact
                assert any(other.qn == _qn(n_r, l1) for other in c.levels)


@pytest.mark.parametrize("k", ["1", "2", "3/2", "5/2", "2/3"])
def test_rational_k_degenerate_perturbed_not(k):
    exact = Fraction(k)
    params = PotentialParams(k=k)
    classes = spectrum.enumerate_levels(params, 80.0)
    assert any(c.size >= 2 for c in classes)
    perturbed = PotentialParams(k=exact + Fraction(1, 10_000_000))
    perturbed_classes = spectrum.enumerate_levels(perturbed, 80.0)
    assert all(c.size == 1 for c in perturbed_classes)


def test_irrational_surrogate_singletons():
    params = PotentialParams(k="14142135/10000000")
    classes = spectrum.enumerate_levels(params, 30.0)
    assert classes
    assert all(c.size == 1 for c in classes)


def test_tolerance_grouping_without_rational_exponents():
    # p_phi = p_psi = sqrt(5)/2: energies stay floats, grouping by tolerance
    params = PotentialParams(alpha=1, beta=1)
    classes = spectrum.enumerate_levels(params, 30.0)
    assert all(lv.energy_exact is None for c in classes for lv in c.levels)
    assert [c.size for c in classes[:3]] == [1, 2, 3]


def test_angular_wavefunction_examples(isotropic):
    theta = np.linspace(0.05, math.pi / 2 - 0.05, 17)
    np.testing.assert_allclose(spectrum.angular_wavefunction(0, theta, isotropic), 0.5 * np.sin(2 * theta), rtol=1e-13)
    value = spectrum.angular_wavefunction(0, math.pi / 4, PotentialParams(alpha=2, beta=0.75))
    assert value == pytest.approx(0.5 * (math.sqrt(2) / 2) ** 1.5, rel=1e-13)
    assert value == pytest.approx(0.29730, abs=1e-5)


def test_angular_walls(barriers):
    assert spectrum.angular_wavefunction(2, 0.0, barriers) == 0.0
    assert spectrum.angular_wavefunction(2, barriers.theta_max, barriers) == 0.0
    assert spectrum.angular_wavefunction(0, 1e-7, barriers) < 1e-12
    with pytest.raises(DomainError):
        spectrum.angular_wavefunction(0, -0.1, barriers)
    with pytest.raises(DomainError):
        spectrum.angular_wavefunction(0, barriers.theta_max + 0.1, barriers)


def test_jacobi_arguments_differ_by_sign(barriers):
    theta = np.linspace(0.05, barriers.theta_max - 0.05, 9)
    even = spectrum.angular_wavefunction(2, theta, barriers, JacobiArgument.COS_2T)
    odd = spectrum.angular_wavefunction(1, theta, barriers, JacobiArgument.COS_2T)
    assert not np.allclose(even, spectrum.angular_wavefunction(2, theta, barriers, JacobiArgument.TWO_SIN2_MINUS_1))
    assert not np.allclose(odd, spectrum.angular_wavefunction(1, theta, barriers, JacobiArgument.TWO_SIN2_MINUS_1))


@pytest.mark.parametrize("l1", range(6))
def test_angular_node_count(l1, barriers):
    theta = np.linspace(0.0, barriers.theta_max, 4001)[1:-1]
    assert _sign_changes(spectrum.angular_wavefunction(l1, theta, barriers)) == l1


@pytest.mark.parametrize("n_r", range(7))
def test_radial_node_count(n_r, wedge):
    r = np.linspace(1e-3, 8.0, 8001)
    assert _sign_changes(spectrum.radial_factor(n_r, 1, wedge, r)) == n_r


def test_first_radial_node_position(wedge):
    lam = spectrum.radial_index(1, wedge)
    r_node = math.sqrt((1.0 + lam) / wedge.omega)
    assert spectrum.radial_factor(1, 1, wedge, r_node) == pytest.approx(0.0, abs=1e-12)


def test_eigenstate_origin_and_ground_positivity(barriers):
    assert spectrum.eigenstate(_qn(2, 1), barriers, 0.0, 0.3) == 0.0
    r = np.linspace(0.05, 4.0, 50)
    assert np.all(spectrum.eigenstate(_qn(0, 0), barriers, r, 0.4) > 0.0)
    with pytest.raises(DomainError):
        spectrum.eigenstate(_qn(0, 0), barriers, -1.0, 0.3)


def _overlap(a, b, params, order=128):
    lam_a = spectrum.radial_index(a.l1, params)
    lam_b = spectrum.radial_index(b.l1, params)
    radial = np.sum(
        spectrum.radial_basis_on_rule(a.n_r, lam_a, order) * spectrum.radial_basis_on_rule(b.n_r, lam_b, order)
    ) / (2.0 * params.omega)
    angular = np.sum(
        spectrum.angular_basis_on_rule(a.l1, params, order) * spectrum.angular_basis_on_rule(b.l1, params, order)
    )
    return spectrum.norm_constant(a, params) * spectrum.norm_constant(b, params) * radial * angular


def test_normalized_states_orthonormal(barriers):
    states = [_qn(0, 0), _qn(1, 0), _qn(0, 1), _qn(2, 0), _qn(1, 1), _qn(0, 2)]
    gram = np.array([[_overlap(a, b, barriers) for b in states] for a in states])
    np.testing.assert_allclose(gram, np.eye(len(states)), atol=1e-6)
    assert abs(_overlap(_qn(0, 0), _qn(1, 0), barriers)) < 1e-8
    assert abs(_overlap(_qn(0, 0), _qn(0, 1), barriers)) < 1e-8


def test_radial_quadrature_matches_closed_form(wedge):
    for n_r, l1 in [(0, 0), (2, 1), (4, 3)]:
        lam = spectrum.radial_index(l1, wedge)
        quadrature = np.sum(spectrum.radial_basis_on_rule(n_r, lam, 128) ** 2) / (2.0 * wedge.omega)
        assert quadrature == pytest.approx(spectrum.radial_norm_closed_form(n_r, lam, wedge.omega), rel=1e-10)


def test_norm_constant_converges_on_doubling(barriers):
    c = spectrum.norm_constant(_qn(1, 2), barriers)
    assert c > 0
    assert spectrum.norm_constant(_qn(1, 2), barriers, order=160) == pytest.approx(c, rel=1e-8)


def test_norm_constant_quadrature_failure(barriers):
    with pytest.raises(QuadratureError):
        spectrum.norm_constant(_qn(6, 3), barriers, order=4)
