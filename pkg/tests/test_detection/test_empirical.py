import logging

import numpy as np
import pytest
from scipy.stats import norm

from core.rng import make_rng
from detection.empirical import TrialCounts, cdf_sup_gap, count_decisions, empirical_eer, empirical_error_profile


def test_count_decisions():
    counts = count_decisions(np.array([1.0, 2.0, 3.0, 4.0]), np.full(4, 2.0), np.array([True, False, True, False]))
    assert list(counts.misses) == [1, 0, 0, 0]
    assert list(counts.false_alarms) == [0, 1, 0, 1]
    assert list(counts.active + counts.inactive) == [1, 1, 1, 1]


def test_merge():
    counts = TrialCounts.empty(2)
    one = count_decisions(np.array([0.0, 5.0]), np.ones(2), np.array([True, True]))
    merged = counts.merge(one).merge(one)
    assert list(merged.active) == [2, 2]
    assert list(merged.misses) == [2, 0]


def test_profile_marks_users_without_samples(caplog):
    counts = TrialCounts(
        active=np.array([10, 0]),
        misses=np.array([2, 0]),
        inactive=np.array([90, 100]),
        false_alarms=np.array([9, 5]),
    )
    with caplog.at_level(logging.WARNING):
        profile = empirical_error_profile(counts, np.ones(2), np.ones(2))
    assert 'undefined' in caplog.text
    assert list(profile.defined) == [True, False]
    assert profile.p_miss[0] == pytest.approx(0.2)
    assert profile.p_false[0] == pytest.approx(0.1)
    assert np.isnan(profile.p_miss[1])
    assert profile.cell_edge_95 == pytest.approx(0.15)
    low, high = profile.miss_interval[0]
    assert low < 0.2 < high


def test_empirical_eer():
    rng = make_rng(5)
    target = rng.normal(2.0, 1.0, 200_000)
    nontarget = rng.normal(0.0, 1.0, 200_000)
    threshold, rate = empirical_eer(target, nontarget)
    assert threshold == pytest.approx(1.0, abs=0.02)
    assert rate == pytest.approx(norm.cdf(-1.0), abs=0.005)


def test_cdf_sup_gap():
    values = np.linspace(0, 1, 50)
    assert cdf_sup_gap(values, values) == 0.0
    assert cdf_sup_gap(values, values + 10) == 1.0
    assert cdf_sup_gap(np.append(values, np.nan), values) == 0.0
