import logging
from pathlib import Path

import numpy as np
from scipy import optimize
from scipy.interpolate import interp1d
from scipy.special import gammainc, gammaincinv

from core.errors import DomainError
from core.tables import TableWriter
from core.types import FloatArray
from detection.models import ErrorPair
from quantize.models import LmaxRow, QuantizerSpec

logger = logging.getLogger(__name__)

# combined codebook size 2^(Q·B_bn) enumerated exactly per user
MAX_SUPPORT_BITS = 22
# support values closer than this (relative) are one atom of the statistic
ATOM_TOL = 1e-9


def mixture_cdf(level: float, gain: float, tau_sq: float, antennas: int, activity_prob: float) -> float:
    """Pr(‖x̃‖² ≤ level) for x̃ ~ (1-λ)CN(0, τ²I) + λCN(0, (g²+τ²)I)."""
    inactive = gammainc(antennas, level / tau_sq)
    active = gammainc(antennas, level / (gain**2 + tau_sq))
    return float((1 - activity_prob) * inactive + activity_prob * active)


def lmax_for_user(gain: float, tau_sq: float, antennas: int, activity_prob: float, zeta: float) -> float:
    if not 0 < zeta < 1:
        raise DomainError(f"zeta must lie in (0, 1), got {zeta}")
    # at this point the active component alone already reaches zeta
    upper = (gain**2 + tau_sq) * float(gammaincinv(antennas, zeta))

    def excess(level: float) -> float:
        return mixture_cdf(level, gain, tau_sq, antennas, activity_prob) - zeta

    if abs(excess(upper)) <= 1e-12:
        return upper
    return float(optimize.bisect(excess, 0.0, upper, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000))


def quantize(squared_norm: float | FloatArray, spec: QuantizerSpec) -> FloatArray:
    """Nearest codebook level; inputs above l_max map to the top level."""
    values = np.asarray(squared_norm, dtype=float)
    step = spec.l_max / spec.num_levels
    index = np.clip(np.floor(values / step), 0, spec.num_levels - 1)
    return (2 * index + 1) * step / 2


def fronthaul_bits(spec: QuantizerSpec | int, users_forwarded: int, cooperation: int) -> int:
    """Bits each BS forwards per coherence block: B_bn·N values of Q bits on average."""
    q_bits = spec if isinstance(spec, int) else spec.q_bits
    return cooperation * users_forwarded * q_bits


def bin_probabilities(l_max: float, q_bits: int, variance: float, antennas: int) -> FloatArray:
    """Pr(quantize(‖x̃‖²) = k-th level) when ‖x̃‖²/variance ~ Gamma(M, 1)."""
    num_levels = 2**q_bits
    edges = np.arange(num_levels + 1) * (l_max / num_levels)
    cdf = gammainc(antennas, edges / variance)
    cdf[-1] = 1.0
    return np.diff(cdf)


class QuantizedErrorModel:
    """Exact law of Σ_j Δ_j·q(‖x̃_j‖²) for one user under both hypotheses.

    The quantized statistic takes finitely many values, so the errors of a
    threshold rule are sums of atom probabilities and the equal-error point is
    the cut between atoms that minimizes max(P_M, P_F).
    """

    def __init__(self, gains: FloatArray, l_max: FloatArray, q_bits: int, tau_sq: float, antennas: int):
        g_sq = np.atleast_1d(np.asarray(gains, dtype=float)) ** 2
        l_max = np.atleast_1d(np.asarray(l_max, dtype=float))
        if q_bits * len(g_sq) > MAX_SUPPORT_BITS:
            raise DomainError(f"{len(g_sq)} entries of {q_bits} bits exceed 2^{MAX_SUPPORT_BITS} codewords")
        delta = 1 / tau_sq - 1 / (g_sq + tau_sq)
        k = np.arange(1, 2**q_bits + 1)
        support = np.zeros(1)
        active = np.ones(1)
        inactive = np.ones(1)
        for d, top, gs in zip(delta, l_max, g_sq):
            levels = (2 * k - 1) * top / 2 ** (q_bits + 1)
            support = (support[:, None] + d * levels).ravel()
            active = (active[:, None] * bin_probabilities(top, q_bits, gs + tau_sq, antennas)).ravel()
            inactive = (inactive[:, None] * bin_probabilities(top, q_bits, tau_sq, antennas)).ravel()
        order = np.argsort(support, kind="stable")
        support = support[order]
        span = max(float(support[-1]), np.finfo(float).tiny)
        starts = np.concatenate([[True], np.diff(support) > ATOM_TOL * span])
        atom = np.cumsum(starts) - 1
        self.atoms = support[starts]
        self.active = np.bincount(atom, weights=active[order])
        self.inactive = np.bincount(atom, weights=inactive[order])

    def cuts(self) -> FloatArray:
        """Thresholds separating consecutive atoms; the first accepts every value, the last none."""
        mids = (self.atoms[1:] + self.atoms[:-1]) / 2
        below = self.atoms[0] - max(abs(self.atoms[0]), 1.0)
        return np.concatenate([[below], mids, [np.inf]])

    def _errors_at_cuts(self) -> tuple[FloatArray, FloatArray]:
        p_miss = np.concatenate([[0.0], np.cumsum(self.active)])
        p_false = np.clip(1 - np.concatenate([[0.0], np.cumsum(self.inactive)]), 0.0, 1.0)
        return np.minimum(p_miss, 1.0), p_false

    def errors(self, threshold: float) -> ErrorPair:
        above = self.atoms >= threshold
        return ErrorPair(p_miss=float(self.active[~above].sum()), p_false=float(self.inactive[above].sum()))

    def equal_error_threshold(self) -> tuple[float, ErrorPair]:
        p_miss, p_false = self._errors_at_cuts()
        best = int(np.argmin(np.maximum(p_miss, p_false)))
        return float(self.cuts()[best]), ErrorPair(p_miss=float(p_miss[best]), p_false=float(p_false[best]))


def quantized_equal_error(
    gains: FloatArray, l_max: FloatArray, q_bits: int, tau_sq: float, antennas: int
) -> tuple[float, ErrorPair]:
    """Equal-error threshold on Σ Δ_j·q_j and its errors for one user."""
    return QuantizedErrorModel(gains, l_max, q_bits, tau_sq, antennas).equal_error_threshold()


class LmaxTable:
    """l_max against g for fixed (τ², M, λ, ζ), interpolated in log-log."""

    def __init__(self, gains: FloatArray, l_max: FloatArray, antennas: int, activity_prob: float, zeta: float):
        order = np.argsort(gains)
        self.gains = np.asarray(gains, dtype=float)[order]
        self.l_max = np.asarray(l_max, dtype=float)[order]
        self.antennas = antennas
        self.activity_prob = activity_prob
        self.zeta = zeta
        self._interp = interp1d(
            np.log(self.gains),
            np.log(self.l_max),
            bounds_error=False,
            fill_value=(np.log(self.l_max[0]), np.log(self.l_max[-1])),
        )

    @classmethod
    def build(
        cls,
        g_min: float,
        g_max: float,
        tau_sq: float,
        antennas: int,
        activity_prob: float,
        zeta: float,
        bins: int = 256,
    ) -> "LmaxTable":
        gains = np.geomspace(g_min, g_max, bins)
        values = [lmax_for_user(g, tau_sq, antennas, activity_prob, zeta) for g in gains]
        return cls(gains, np.array(values), antennas, activity_prob, zeta)

    def lookup(self, gains: float | FloatArray) -> FloatArray:
        return np.exp(self._interp(np.log(np.asarray(gains, dtype=float))))

    def rows(self) -> list[LmaxRow]:
        return [
            LmaxRow(
                g_bin=float(g), antennas=self.antennas, activity_prob=self.activity_prob, zeta=self.zeta, l_max=float(v)
            )
            for g, v in zip(self.gains, self.l_max)
        ]

    def export(self, writer: TableWriter, path: Path) -> Path:
        return writer.write(path, "lmax", self.rows(), LmaxRow)

    @classmethod
    def load(cls, path: Path) -> "LmaxTable":
        rows = TableWriter.read(path, LmaxRow)
        if not rows:
            raise DomainError(f"l_max table '{path}' is empty")
        first = rows[0]
        return cls(
            np.array([r.g_bin for r in rows]),
            np.array([r.l_max for r in rows]),
            first.antennas,
            first.activity_prob,
            first.zeta,
        )


def build_spec(
    gains: FloatArray, tau_sq: float, antennas: int, activity_prob: float, q_bits: int, zeta: float
) -> QuantizerSpec:
    """Per-entry codebooks for an array of large-scale coefficients."""
    gains = np.asarray(gains, dtype=float)
    flat = [lmax_for_user(float(g), tau_sq, antennas, activity_prob, zeta) for g in gains.ravel()]
    return QuantizerSpec(q_bits=q_bits, zeta=zeta, l_max=np.array(flat).reshape(gains.shape))
