"""Distribution of Σ_j w_j·E_j with E_j ~ Gamma(M, 1) independent.

The CDF is built stage by stage: convolving the Gamma density of one stage with
the CDF of the remaining stages keeps the form Σ c·x^p·e^(-ρx), and every
convolution has a closed-form antiderivative. Coefficients alternate in sign and
nearly equal rates cancel heavily, so the algebra runs in mpmath at a working
precision raised until the observed cancellation is covered.
"""

import logging
from collections import defaultdict

import numpy as np
from mpmath import mp, mpf

from core.rng import make_rng

logger = logging.getLogger(__name__)

# working precision in decimal digits
START_DPS = 50
MAX_DPS = 400
# relative error accepted after cancellation before falling back to sampling
CANCELLATION_LIMIT = 1e-6
# rates closer than this (relative) are merged into one stage
RATE_MERGE_TOL = 1e-9
MAX_STAGES = 4
FALLBACK_SAMPLES = 1_000_000
FALLBACK_SEED = 7

Terms = dict[mpf, dict[int, mpf]]


def _merge_rates(weights: list[float], shape: int) -> list[tuple[float, int]]:
    stages: list[tuple[float, int]] = []
    for rate in sorted(1 / w for w in weights):
        if stages and abs(rate - stages[-1][0]) <= RATE_MERGE_TOL * rate:
            stages[-1] = (stages[-1][0], stages[-1][1] + shape)
        else:
            stages.append((rate, shape))
    return stages


def _convolve(terms: Terms, rate: mpf, shape: int) -> Terms:
    """Convolve ρ^k y^(k-1) e^(-ρy)/(k-1)! with every term c·z^p·e^(-ρ' z)."""
    out: Terms = defaultdict(lambda: defaultdict(mpf))
    rate_pow = rate**shape
    for other, poly in terms.items():
        for p, c in poly.items():
            if not c:
                continue
            if other == rate:
                out[rate][shape + p] += c * rate_pow * mp.factorial(p) / mp.factorial(shape + p)
                continue
            delta = rate - other
            prefactor = c * rate_pow / mp.factorial(shape - 1)
            for i in range(p + 1):
                n = shape - 1 + i
                weight = prefactor * (-1) ** i * mp.binomial(p, i) * mp.factorial(n) / delta ** (n + 1)
                out[other][p - i] += weight
                term = weight
                for kk in range(n + 1):
                    out[rate][p - i + kk] -= term
                    term = term * delta / (kk + 1)
    return {r: dict(poly) for r, poly in out.items()}


class WeightedGammaSum:
    def __init__(self, weights: list[float] | np.ndarray, shape: int):
        self.weights = [float(w) for w in weights if w > 0]
        self.shape = shape
        self.stages = _merge_rates(self.weights, shape) if self.weights else []
        self.fallback = len(self.stages) > MAX_STAGES
        self._terms: Terms | None = None
        self._dps = START_DPS
        self._samples: np.ndarray | None = None
        if self.fallback:
            logger.warning("%d distinct stages exceed the closed form, sampling instead", len(self.stages))

    def _build(self) -> Terms:
        if self._terms is None:
            terms: Terms = {mpf(0): {0: mpf(1)}}
            for rate, shape in self.stages:
                terms = _convolve(terms, mpf(rate), shape)
            self._terms = terms
        return self._terms

    def _single_stage(self, x: float) -> tuple[float, float]:
        rate, shape = self.stages[0]
        point = mpf(rate) * x
        cdf = mp.gammainc(shape, 0, point, regularized=True)
        sf = mp.gammainc(shape, point, mp.inf, regularized=True)
        return float(cdf), float(sf)

    def _evaluate(self, x: float) -> tuple[float, float] | None:
        """(cdf, sf) or None when cancellation exceeds the working precision."""
        point = mpf(x)
        constant = mpf(0)
        decaying = mpf(0)
        magnitude = mpf(0)
        for rate, poly in self._build().items():
            scale = mp.exp(-rate * point)
            for p, c in poly.items():
                value = c * point**p * scale
                magnitude += abs(value)
                if rate == 0:
                    constant += value
                else:
                    decaying += value
        cdf = constant + decaying
        sf = (1 - constant) - decaying
        smallest = min(abs(cdf), abs(sf))
        if smallest == 0 or magnitude / smallest * mpf(10) ** (-self._dps) > CANCELLATION_LIMIT:
            return None
        return min(max(float(cdf), 0.0), 1.0), min(max(float(sf), 0.0), 1.0)

    def _sampled(self, x: float) -> tuple[float, float]:
        if self._samples is None:
            rng = make_rng(FALLBACK_SEED, len(self.weights), self.shape)
            draws = rng.gamma(self.shape, size=(FALLBACK_SAMPLES, len(self.weights)))
            self._samples = np.sort(draws @ np.asarray(self.weights))
        below = np.searchsorted(self._samples, x, side="left") / len(self._samples)
        return float(below), float(1 - below)

    def cdf_sf(self, x: float) -> tuple[float, float]:
        if x <= 0:
            return 0.0, 1.0
        if not self.stages:
            return 1.0, 0.0
        while not self.fallback:
            with mp.workdps(self._dps):
                result = self._single_stage(x) if len(self.stages) == 1 else self._evaluate(x)
            if result is not None:
                return result
            if self._dps >= MAX_DPS:
                logger.warning("cancellation beyond %d digits, sampling instead", MAX_DPS)
                self.fallback = True
                break
            self._dps *= 2
            self._terms = None
        return self._sampled(x)

    def cdf(self, x: float) -> float:
        return self.cdf_sf(x)[0]

    def sf(self, x: float) -> float:
        return self.cdf_sf(x)[1]
