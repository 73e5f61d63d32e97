import math

import numpy as np
import pytest

from core.errors import UnsupportedParameterError
from core.rng import make_rng
from geometry.models import FadingDist, NetworkConfig
from geometry.services import (
    fading_dist,
    interference_limit_large_b,
    sample_disc_distances,
    second_moment,
    second_moment_out_of_cell,
)


@pytest.fixture
def cfg():
    return NetworkConfig()


def test_density_integrates_to_one(cfg):
    assert fading_dist(cfg, 0.0, cfg.cell_radius).total_mass() == pytest.approx(1.0, abs=1e-8)
    assert fading_dist(cfg, cfg.cell_radius, cfg.network_radius).total_mass() == pytest.approx(1.0, abs=1e-8)


def test_support(cfg):
    dist = fading_dist(cfg, 0.0, cfg.cell_radius)
    assert dist.eps_max == math.inf
    assert dist.eps_min == pytest.approx(cfg.gain(cfg.cell_radius))
    assert dist.gamma == pytest.approx(40 / 37.6 + 1)


def test_cdf_matches_disc_geometry(cfg):
    r = cfg.cell_radius
    dist = fading_dist(cfg, 0.0, r)
    # G <= g(r/2) exactly when the user is beyond r/2
    assert float(dist.cdf(cfg.gain(r / 2))) == pytest.approx(0.75)
    samples = dist.sample(200_000, make_rng(9))
    assert abs(np.mean(samples <= cfg.gain(r / 2)) - 0.75) < 0.01


def test_invalid_radii(cfg):
    with pytest.raises(FadingDist.InvalidError):
        fading_dist(cfg, 5.0, 5.0)
    with pytest.raises(FadingDist.InvalidError):
        second_moment(cfg, 0.0, 10.0)


def test_second_moment_against_sampling(cfg):
    r_min, r_max = cfg.cell_radius, cfg.network_radius
    d = sample_disc_distances(r_min, r_max, 400_000, make_rng(4))
    empirical = np.mean(cfg.gain(d) ** 2)
    assert second_moment(cfg, r_min, r_max) == pytest.approx(empirical, rel=0.02)
    assert second_moment_out_of_cell(cfg) == second_moment(cfg, r_min, r_max)


def test_second_moment_thin_annulus(cfg):
    assert second_moment(cfg, 1000.0, 1000.0) == pytest.approx(cfg.gain(1000.0) ** 2, rel=1e-12)
    assert second_moment(cfg, 1000.0, 1000.0 * (1 + 1e-6)) == pytest.approx(cfg.gain(1000.0) ** 2, rel=1e-5)


def test_second_moment_needs_fast_decay():
    with pytest.raises(UnsupportedParameterError):
        second_moment(NetworkConfig(pathloss_beta=20.0), 10.0, 100.0)


def test_interference_limit_large_b():
    cfg = NetworkConfig(num_cells=10**6)
    finite = cfg.users_per_cell * (cfg.num_cells - 1) * cfg.activity_prob / cfg.seq_len
    finite *= second_moment_out_of_cell(cfg)
    assert interference_limit_large_b(cfg) == pytest.approx(finite, rel=1e-3)
