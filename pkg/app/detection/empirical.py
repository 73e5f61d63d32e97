import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import binomtest, ks_2samp

from core.errors import ExperimentError
from core.types import BoolArray, FloatArray
from detection.models import ErrorProfile, ProfileSource

logger = logging.getLogger(__name__)

CONFIDENCE = 0.95


@dataclass(kw_only=True)
class TrialCounts:
    """Decision counts per user, summed over trials."""

    active: np.ndarray
    misses: np.ndarray
    inactive: np.ndarray
    false_alarms: np.ndarray

    @classmethod
    def empty(cls, users: int) -> "TrialCounts":
        zeros = np.zeros(users, dtype=np.int64)
        return cls(active=zeros.copy(), misses=zeros.copy(), inactive=zeros.copy(), false_alarms=zeros.copy())

    def merge(self, other: "TrialCounts") -> "TrialCounts":
        return TrialCounts(
            active=self.active + other.active,
            misses=self.misses + other.misses,
            inactive=self.inactive + other.inactive,
            false_alarms=self.false_alarms + other.false_alarms,
        )


def count_decisions(statistic: FloatArray, thresholds: FloatArray, activity: BoolArray) -> TrialCounts:
    """Counts for one trial; a user is declared active when statistic ≥ threshold."""
    declared = np.asarray(statistic) >= np.asarray(thresholds)
    activity = np.asarray(activity, dtype=bool)
    counts = TrialCounts(
        active=activity.astype(np.int64),
        misses=(activity & ~declared).astype(np.int64),
        inactive=(~activity).astype(np.int64),
        false_alarms=(~activity & declared).astype(np.int64),
    )
    hits = activity & declared
    negatives = ~activity & ~declared
    if not (
        np.array_equal(counts.misses + hits, counts.active)
        and np.array_equal(counts.false_alarms + negatives, counts.inactive)
    ):
        raise ExperimentError("decision counting", ValueError("counts do not add up to the population"))
    return counts


def _wilson(successes: np.ndarray, trials: np.ndarray) -> FloatArray:
    bounds = np.full((len(trials), 2), np.nan)
    for i, (k, n) in enumerate(zip(successes, trials)):
        if n > 0:
            ci = binomtest(int(k), int(n)).proportion_ci(confidence_level=CONFIDENCE, method="wilson")
            bounds[i] = ci.low, ci.high
    return bounds


def empirical_error_profile(counts: TrialCounts, thresholds: FloatArray, gains: FloatArray) -> ErrorProfile:
    defined = (counts.active > 0) & (counts.inactive > 0)
    if not np.all(defined):
        logger.warning("%d users lack active or inactive samples, left undefined", int(np.sum(~defined)))
    with np.errstate(invalid="ignore", divide="ignore"):
        p_miss = np.where(counts.active > 0, counts.misses / np.maximum(counts.active, 1), np.nan)
        p_false = np.where(counts.inactive > 0, counts.false_alarms / np.maximum(counts.inactive, 1), np.nan)
    return ErrorProfile(
        source=ProfileSource.EMPIRICAL,
        p_miss=p_miss,
        p_false=p_false,
        thresholds=np.asarray(thresholds, dtype=float),
        gains=np.asarray(gains, dtype=float),
        defined=defined,
        miss_interval=_wilson(counts.misses, counts.active),
        false_interval=_wilson(counts.false_alarms, counts.inactive),
    )


def empirical_eer(target: FloatArray, nontarget: FloatArray) -> tuple[float, float]:
    """Equal-error threshold and rate from score samples (active vs inactive)."""
    target = np.sort(np.asarray(target, dtype=float))
    nontarget = np.sort(np.asarray(nontarget, dtype=float))
    candidates = np.unique(np.concatenate([target, nontarget]))
    p_miss = np.searchsorted(target, candidates, side="left") / len(target)
    p_false = 1 - np.searchsorted(nontarget, candidates, side="left") / len(nontarget)
    gap = p_miss - p_false
    idx = int(np.searchsorted(gap, 0.0, side="left"))
    if idx == 0:
        return float(candidates[0]), float((p_miss[0] + p_false[0]) / 2)
    if idx == len(candidates):
        return float(candidates[-1]), float((p_miss[-1] + p_false[-1]) / 2)
    lo, hi = idx - 1, idx
    weight = -gap[lo] / (gap[hi] - gap[lo])
    threshold = candidates[lo] + weight * (candidates[hi] - candidates[lo])
    rate = p_miss[lo] + weight * (p_miss[hi] - p_miss[lo])
    return float(threshold), float(rate)


def cdf_sup_gap(first: FloatArray, second: FloatArray) -> float:
    first = np.asarray(first, dtype=float)
    second = np.asarray(second, dtype=float)
    first, second = first[np.isfinite(first)], second[np.isfinite(second)]
    if len(first) == 0 or len(second) == 0:
        return float("nan")
    return float(ks_2samp(first, second).statistic)
