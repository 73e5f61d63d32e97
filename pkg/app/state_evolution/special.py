import functools
import math

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.special import expit, gammaln, xlogy

from core.types import FloatArray

# transition half-width of the logistic factor, in units of 1/s
_BAND = 40.0
# log10(s) range tabulated for the state-evolution integrals
_TABLE_LOG10_S = (-8.0, 14.0)
_TABLE_POINTS = 881
_LOG_FLOOR = -745.0
_QUAD_LIMIT = 200
# e-folds of the power-law tail of ψ(g)·g kept by the tail integral
_TAIL_EFOLDS = 40.0


def _mixture_integral(s: float, antennas: int, activity_prob: float, complement: bool) -> float:
    """∫ Gamma(M+1) density · logistic weight, the weight being the posterior
    inactivity probability (``complement``) or its complement."""
    m = antennas
    log_c = math.log1p(-activity_prob) - math.log(activity_prob) if activity_prob < 1 else -math.inf
    log_c += m * math.log1p(s)
    sign = 1.0 if complement else -1.0

    def integrand(t: float) -> float:
        density = math.exp(xlogy(m, t) - t - gammaln(m + 1))
        return density * float(expit(sign * (log_c - s * t)))

    lo, hi = 0.0, m + 1 + _BAND * math.sqrt(m + 1)
    knees: list[float] = []
    if s > 0 and math.isfinite(log_c):
        # the weight is below e^-BAND beyond one band past the knee t0 = log_c/s
        t0, quarter = log_c / s, _BAND / (4 * s)
        knees = [t0 + k * quarter for k in range(-4, 5)]
        if complement and 0 < knees[-1] < hi:
            hi = knees[-1]
        if not complement and lo < knees[0] < hi:
            lo = knees[0]
    points = sorted({lo, hi, *(p for p in knees if lo < p < hi)})
    pieces = [
        integrate.quad(integrand, a, b, epsabs=0, epsrel=1e-10, limit=_QUAD_LIMIT)[0]
        for a, b in zip(points[:-1], points[1:])
    ]
    return math.fsum(pieces)


def phi_m(s: float, antennas: int, activity_prob: float) -> float:
    """φ_M(s) = ∫₀^∞ t^M e^-t / (1 + (1-λ)/λ·(1+s)^M e^-st) dt."""
    if s < 0:
        raise ValueError(f"s must be nonnegative, got {s}")
    return math.exp(gammaln(antennas + 1)) * _mixture_integral(s, antennas, activity_prob, complement=False)


def phi_m_complement(s: float, antennas: int, activity_prob: float) -> float:
    """1 - φ_M(s)/M!, evaluated directly so it keeps relative accuracy when tiny."""
    return _mixture_integral(s, antennas, activity_prob, complement=True)


def psi(g: float, tau_sq: float, antennas: int, activity_prob: float, gamma: float) -> float:
    g_sq = g * g
    rest = phi_m_complement(g_sq / tau_sq, antennas, activity_prob)
    return g ** (2 - gamma) * tau_sq / (g_sq + tau_sq) + g ** (4 - gamma) / (g_sq + tau_sq) * rest


class PhiTable:
    """Cubic spline of log(1 - φ_M(s)/M!) against log s.

    Below the grid the value is held (it tends to log(1-λ)); above it the spline is
    continued linearly, matching the power-law decay of the complement.
    """

    def __init__(self, antennas: int, activity_prob: float):
        self.antennas = antennas
        self.activity_prob = activity_prob
        self.log_s = np.linspace(*_TABLE_LOG10_S, _TABLE_POINTS) * math.log(10)
        values = [phi_m_complement(math.exp(x), antennas, activity_prob) for x in self.log_s]
        self.log_h = np.log(np.maximum(values, math.exp(_LOG_FLOOR)))
        self._spline = CubicSpline(self.log_s, self.log_h)
        self._slope = float(self._spline(self.log_s[-1], 1))

    def complement(self, s: float | FloatArray) -> float | FloatArray:
        with np.errstate(divide="ignore"):
            x = np.log(np.maximum(np.asarray(s, dtype=float), 1e-300))
        lo, hi = self.log_s[0], self.log_s[-1]
        inside = self._spline(np.clip(x, lo, hi))
        above = self.log_h[-1] + self._slope * (x - hi)
        log_h = np.where(x > hi, above, inside)
        return np.exp(np.maximum(log_h, _LOG_FLOOR))

    def psi(self, g: float | FloatArray, tau_sq: float, gamma: float) -> float | FloatArray:
        g = np.asarray(g, dtype=float)
        g_sq = g * g
        rest = self.complement(g_sq / tau_sq)
        return g ** (2 - gamma) * tau_sq / (g_sq + tau_sq) + g ** (4 - gamma) / (g_sq + tau_sq) * rest


@functools.lru_cache(maxsize=32)
def phi_table(antennas: int, activity_prob: float) -> PhiTable:
    return PhiTable(antennas, activity_prob)


def psi_tail_integral(table: PhiTable, eps: float, tau_sq: float, gamma: float) -> float:
    """∫_ε^∞ ψ(g) dg, integrated in v = log(g/ε).

    ψ(g)·g decays like g^(1-γ) once g passes τ, so the range stops
    ``_TAIL_EFOLDS`` e-folds beyond the knee g = τ.
    """

    def integrand(v: float) -> float:
        g = eps * math.exp(v)
        return float(table.psi(g, tau_sq, gamma)) * g

    knee = max(0.5 * math.log(tau_sq) - math.log(eps), 0.0)
    upper = knee + _TAIL_EFOLDS / (gamma - 1)
    points = [0.0, knee, upper] if knee > 0 else [0.0, upper]
    pieces = [
        integrate.quad(integrand, a, b, epsabs=0, epsrel=1e-10, limit=_QUAD_LIMIT)[0]
        for a, b in zip(points[:-1], points[1:])
    ]
    return math.fsum(pieces)
