import logging
from typing import Sequence

import numpy as np
from scipy import optimize
from scipy.special import gammainc, gammaincc
from scipy.stats import norm

from core.errors import DomainError
from core.types import FloatArray
from detection.models import Aggregate, ErrorPair, LlrRecord
from detection.weighted_gamma import WeightedGammaSum

logger = logging.getLogger(__name__)

EQUAL_ERROR_TOL = 1e-9


def llr(squared_norm: float | FloatArray, gain: float | FloatArray, tau_sq: float, antennas: int):
    """log p(x̃|active)/p(x̃|inactive) for the decoupled Gaussian channel."""
    if np.any(np.asarray(tau_sq) <= 0):
        raise DomainError(f"tau_sq must be positive, got {tau_sq}")
    g_sq = np.asarray(gain, dtype=float) ** 2
    delta = 1 / tau_sq - 1 / (g_sq + tau_sq)
    return delta * squared_norm - antennas * np.log1p(g_sq / tau_sq)


def aggregate(records: Sequence[LlrRecord]) -> Aggregate:
    if not records:
        raise DomainError("aggregation needs at least one record")
    statistic = float(sum(r.delta * r.squared_norm for r in records))
    return Aggregate(statistic=statistic, llr=float(sum(r.llr for r in records)))


def pm_pf_massive_analytic(gain: float, tau_sq: float, antennas: int, threshold: float) -> ErrorPair:
    """Errors of the rule ‖x̃‖² ≥ l; ‖x̃‖²/variance is Gamma(M, 1) under each hypothesis."""
    if threshold < 0:
        raise DomainError(f"threshold must be nonnegative, got {threshold}")
    p_miss = float(gammainc(antennas, threshold / (gain**2 + tau_sq)))
    p_false = float(gammaincc(antennas, threshold / tau_sq))
    return ErrorPair(p_miss=p_miss, p_false=p_false)


def _coop_weights(gains: Sequence[float], tau_sq: float | Sequence[float]) -> tuple[FloatArray, FloatArray]:
    # statistic Σ Δ_j‖x̃_j‖² is Σ θ_j E_j when active and Σ θ_j/(1+θ_j) E_j when inactive
    theta = np.asarray(gains, dtype=float) ** 2 / np.asarray(tau_sq, dtype=float)
    return theta, theta / (1 + theta)


class CoopErrorModel:
    """Error probabilities of Σ_j Δ_j‖x̃_j‖² ≥ l for one user served by several BSs."""

    def __init__(self, gains: Sequence[float], tau_sq: float | Sequence[float], antennas: int):
        active, inactive = _coop_weights(gains, tau_sq)
        self.active = WeightedGammaSum(active, antennas)
        self.inactive = WeightedGammaSum(inactive, antennas)
        self.antennas = antennas
        self.mean_active = float(np.sum(active)) * antennas

    def errors(self, threshold: float) -> ErrorPair:
        if threshold < 0:
            raise DomainError(f"threshold must be nonnegative, got {threshold}")
        p_miss = self.active.cdf(threshold)
        p_false = self.inactive.sf(threshold)
        return ErrorPair(p_miss=p_miss, p_false=p_false, fallback=self.active.fallback or self.inactive.fallback)


def pm_pf_coop_analytic(
    gains: Sequence[float], tau_sq: float | Sequence[float], antennas: int, threshold: float
) -> ErrorPair:
    return CoopErrorModel(gains, tau_sq, antennas).errors(threshold)


def pm_pf_clt(gain: float, tau_sq: float, antennas: int, threshold: float) -> ErrorPair:
    """Gaussian approximation of the massive-MIMO errors for many antennas."""
    root = np.sqrt(antennas)
    p_miss = float(norm.cdf((threshold / (gain**2 + tau_sq) - antennas) / root))
    p_false = float(norm.sf((threshold / tau_sq - antennas) / root))
    return ErrorPair(p_miss=p_miss, p_false=p_false)


def _bisect_equal_error(errors, upper: float) -> tuple[float, ErrorPair]:
    def gap(threshold: float) -> float:
        pair = errors(threshold)
        return pair.p_miss - pair.p_false

    while gap(upper) < 0:
        upper *= 2
    if abs(gap(upper)) < EQUAL_ERROR_TOL:
        return upper, errors(upper)
    threshold = optimize.bisect(gap, 0.0, upper, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000)
    return threshold, errors(threshold)


def equal_error_threshold(
    gains: float | Sequence[float], tau_sq: float | Sequence[float], antennas: int
) -> tuple[float, ErrorPair]:
    """Threshold l* with P_M(l*) = P_F(l*) and the common error."""
    g = np.atleast_1d(np.asarray(gains, dtype=float))
    if len(g) == 1 and np.ndim(tau_sq) == 0:
        tau = float(tau_sq)
        gain = float(g[0])
        upper = antennas * (gain**2 + tau)
        return _bisect_equal_error(lambda l: pm_pf_massive_analytic(gain, tau, antennas, l), upper)
    model = CoopErrorModel(g, tau_sq, antennas)
    return _bisect_equal_error(model.errors, max(model.mean_active, np.finfo(float).tiny))


def roc_curve(
    gains: float | Sequence[float], tau_sq: float, antennas: int, points: int = 200
) -> list[tuple[float, ErrorPair]]:
    """(threshold, errors) pairs sweeping l across the support of both hypotheses."""
    g = np.atleast_1d(np.asarray(gains, dtype=float))
    spread = antennas + 10 * np.sqrt(antennas) + 10
    if len(g) == 1:
        upper = (g[0] ** 2 + tau_sq) * spread
        errors = lambda l: pm_pf_massive_analytic(float(g[0]), tau_sq, antennas, l)  # noqa: E731
    else:
        model = CoopErrorModel(g, tau_sq, antennas)
        upper = float(np.sum(g**2 / tau_sq)) * spread
        errors = model.errors
    return [(float(l), errors(float(l))) for l in np.linspace(0, upper, points)]
