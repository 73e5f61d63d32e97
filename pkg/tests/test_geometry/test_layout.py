import math

import numpy as np
import pytest
from scipy.stats import kstest

from core.errors import ConfigurationError
from geometry.models import NetworkConfig
from geometry.services import build_layout, closest_bs, layout_rows, sample_users, tier_count


@pytest.fixture
def layout():
    return build_layout(NetworkConfig())


def test_tier_count():
    assert [tier_count(b) for b in (1, 7, 19, 37)] == [0, 1, 2, 3]
    with pytest.raises(ConfigurationError):
        tier_count(8)


def test_centre_cell_first(layout):
    d = np.hypot(*layout.positions.T)
    assert d[0] == 0
    assert np.allclose(d[1:], 2000)


def test_second_tier_distances():
    layout = build_layout(NetworkConfig(num_cells=19))
    d = np.sort(np.hypot(*layout.positions.T)[7:])
    assert np.allclose(d[:6], 2000 * math.sqrt(3))
    assert np.allclose(d[6:], 4000)


def test_cells_within(layout):
    assert layout.cells_within(0, 1) == list(range(7))
    assert layout.cells_within(0, 0) == [0]
    big = build_layout(NetworkConfig(num_cells=19))
    assert len(big.cells_within(1, 1)) == 7


def test_contains(layout):
    up = layout.cells_within(0, 1)[1:]
    above = next(c for c in up if np.allclose(layout.positions[c], [0, 2000]))
    assert layout.contains(0, np.array([0.0, 0.0]))
    assert layout.contains(0, np.array([0.0, 990.0]))
    assert not layout.contains(0, np.array([0.0, 1010.0]))
    assert layout.contains(above, np.array([0.0, 1010.0]))


def test_layout_rows(layout):
    rows = layout_rows(layout)
    assert [r.bs_id for r in rows] == list(range(7))
    assert (rows[0].x, rows[0].y) == (0.0, 0.0)


def test_users_stay_in_home_cell(layout):
    placement = sample_users(NetworkConfig(users_per_cell=500), layout, 11)
    assert placement.positions.shape == (7, 500, 2)
    for cell in range(7):
        assert np.all(layout.contains(cell, placement.positions[cell]))


def test_users_uniform_over_cell(layout):
    placement = sample_users(NetworkConfig(users_per_cell=4000), layout, 3)
    centre = placement.positions[0]
    assert np.all(np.abs(centre.mean(axis=0)) < 60)
    # hexagon area fraction inside the inscribed circle is pi/(2*sqrt(3))
    inside = np.hypot(*centre.T) <= 1000
    assert abs(inside.mean() - math.pi / (2 * math.sqrt(3))) < 0.03


def test_radial_law_inside_inscribed_circle(layout):
    placement = sample_users(NetworkConfig(users_per_cell=4000), layout, 8)
    d = np.hypot(*placement.positions[0].T)
    inner = d[d <= 1000]
    assert kstest(inner, lambda r: (r / 1000) ** 2).pvalue > 1e-3


def test_disc_region_radial_law(layout):
    cfg = NetworkConfig(users_per_cell=4000, user_region='disc')
    placement = sample_users(cfg, layout, 9)
    offsets = placement.positions[2] - layout.positions[2]
    d = np.hypot(*offsets.T)
    assert d.max() <= cfg.cell_radius * (1 + 1e-12)
    assert kstest(d, lambda r: (r / cfg.cell_radius) ** 2).pvalue > 1e-3
    angle = np.arctan2(offsets[:, 1], offsets[:, 0])
    assert kstest(angle, 'uniform', args=(-math.pi, 2 * math.pi)).pvalue > 1e-3


def test_placement_is_reproducible(layout):
    cfg = NetworkConfig(users_per_cell=50)
    assert np.array_equal(sample_users(cfg, layout, 5).positions, sample_users(cfg, layout, 5).positions)
    assert not np.array_equal(sample_users(cfg, layout, 5).positions, sample_users(cfg, layout, 6).positions)


def test_closest_bs(layout):
    placement = sample_users(NetworkConfig(users_per_cell=100), layout, 1)
    serving = closest_bs(layout, placement, 0, 3)
    assert serving.shape == (100, 3)
    assert np.all(serving[:, 0] == 0)
    d = placement.distances(layout)[:, 0, :].T
    ordered = np.take_along_axis(d, serving, axis=1)
    assert np.all(np.diff(ordered, axis=1) >= 0)


def test_closest_bs_out_of_range(layout):
    placement = sample_users(NetworkConfig(users_per_cell=10), layout, 1)
    with pytest.raises(ConfigurationError):
        closest_bs(layout, placement, 0, 8)
