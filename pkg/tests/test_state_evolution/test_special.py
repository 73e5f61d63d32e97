import math
import warnings

import numpy as np
import pytest
from scipy.integrate import IntegrationWarning
from scipy.special import expit

from core.rng import make_rng
from state_evolution.special import PhiTable, phi_m, phi_m_complement, phi_table, psi, psi_tail_integral

GAMMA = 40 / 37.6 + 1


def test_no_signal_limit():
    assert phi_m_complement(0.0, 4, 0.05) == pytest.approx(0.95, rel=1e-8)
    assert phi_m(0.0, 4, 0.05) == pytest.approx(math.factorial(4) * 0.05, rel=1e-8)


def test_complement_vanishes_at_high_snr():
    assert phi_m_complement(1e4, 4, 0.05) < 1e-3 < phi_m_complement(1.0, 4, 0.05) < 0.95


def test_negative_argument():
    with pytest.raises(ValueError):
        phi_m(-1.0, 4, 0.05)


@pytest.mark.parametrize('s, antennas, activity_prob', [(4.0, 8, 0.05), (0.7, 1, 0.05), (20.0, 4, 0.3)])
def test_phi_against_sampling(s, antennas, activity_prob):
    t = make_rng(12).gamma(antennas + 1, size=1_000_000)
    log_c = math.log((1 - activity_prob) / activity_prob) + antennas * math.log1p(s)
    weights = expit(s * t - log_c)
    se = weights.std() / math.sqrt(len(t))
    expected = phi_m(s, antennas, activity_prob) / math.factorial(antennas)
    assert abs(weights.mean() - expected) <= 5 * se + 1e-12


@pytest.mark.parametrize('antennas', [1, 4, 8])
def test_always_active_limit(antennas):
    assert phi_m(3.0, antennas, 1.0) == pytest.approx(math.factorial(antennas), rel=1e-8)
    assert phi_m(3.0, antennas, 1 - 1e-9) == pytest.approx(math.factorial(antennas), rel=1e-6)


def test_phi_increases_with_activity():
    values = [phi_m(1.0, 4, p) for p in (0.01, 0.05, 0.2, 0.5, 0.9)]
    assert all(b > a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize('s', [1e-3, 0.37, 5.0, 120.0])
def test_table_matches_direct_evaluation(s):
    table = phi_table(4, 0.05)
    assert float(table.complement(s)) == pytest.approx(phi_m_complement(s, 4, 0.05), rel=1e-4)
    assert float(table.psi(1e-6, 1e-13, GAMMA)) == pytest.approx(psi(1e-6, 1e-13, 4, 0.05, GAMMA), rel=1e-4)


def test_table_is_cached():
    assert phi_table(4, 0.05) is phi_table(4, 0.05)


@pytest.mark.parametrize('eps, tau_sq', [(1e-9, 1e-13), (1e-6, 1e-13), (1e-7, 1e-15)])
def test_tail_integral_against_dense_grid(eps, tau_sq):
    table = phi_table(4, 0.05)
    v = np.linspace(0.0, math.log(math.sqrt(tau_sq) / eps) + 60, 200_001)
    g = eps * np.exp(v)
    expected = np.trapezoid(table.psi(g, tau_sq, GAMMA) * g, v)
    assert psi_tail_integral(table, eps, tau_sq, GAMMA) == pytest.approx(expected, rel=1e-4)


@pytest.mark.parametrize('antennas', [1, 8])
def test_quadrature_is_quiet(antennas):
    with warnings.catch_warnings():
        warnings.simplefilter('error', IntegrationWarning)
        table = PhiTable(antennas, 0.05)
        for s in (0.0, 1e-8, 1.0, 1e6, 1e14):
            phi_m(s, antennas, 0.05)
        for eps in (1e-9, 1e-6):
            psi_tail_integral(table, eps, 1e-13, GAMMA)
