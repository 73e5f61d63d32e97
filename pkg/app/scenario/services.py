import logging

import numpy as np

from core.rng import complex_normal, make_rng
from core.types import ComplexMatrix, frozen
from geometry.models import CellLayout, NetworkConfig, UserPlacement
from geometry.services import large_scale_gains, sample_users, second_moment_out_of_cell
from scenario.models import ScenarioInstance

logger = logging.getLogger(__name__)

STREAM_SIGNATURES = 2
STREAM_ACTIVITY = 3
STREAM_CHANNELS = 4
STREAM_NOISE = 5


def generate_signatures(cfg: NetworkConfig, seed: int) -> ComplexMatrix:
    """L x NB signature matrix with i.i.d. CN(0, 1/L) entries."""
    rng = make_rng(seed, STREAM_SIGNATURES)
    shape = (cfg.seq_len, cfg.users_per_cell * cfg.num_cells)
    return frozen(complex_normal(rng, shape, 1 / cfg.seq_len))


def synthesize(
    cfg: NetworkConfig,
    layout: CellLayout,
    seed: int,
    placement: UserPlacement | None = None,
    receivers: tuple[int, ...] | None = None,
    noise_variance: float | None = None,
) -> ScenarioInstance:
    if placement is None:
        placement = sample_users(cfg, layout, seed)
    receivers = tuple(range(cfg.num_cells)) if receivers is None else tuple(receivers)
    sigma2 = cfg.noise_variance if noise_variance is None else noise_variance
    b, n, m, length = cfg.num_cells, cfg.users_per_cell, cfg.antennas, cfg.seq_len

    gains = large_scale_gains(cfg, layout, placement)
    signatures = generate_signatures(cfg, seed)
    activities = make_rng(seed, STREAM_ACTIVITY).random((b, n)) < cfg.activity_prob
    channels = complex_normal(make_rng(seed, STREAM_CHANNELS), (len(receivers), b, n, m))
    noise = complex_normal(make_rng(seed, STREAM_NOISE), (len(receivers), length, m), sigma2)

    x = activities[None, :, :, None] * gains[list(receivers)][:, :, :, None] * channels
    received = np.einsum("lk,rkm->rlm", signatures, x.reshape(len(receivers), b * n, m)) + noise
    return ScenarioInstance(
        activities=frozen(activities),
        large_scale=frozen(gains),
        signatures=signatures,
        channels=frozen(channels),
        noise=frozen(noise),
        received=frozen(received),
        noise_variance=sigma2,
        receivers=receivers,
    )


def effective_noise_variance_tin(cfg: NetworkConfig) -> float:
    """Background noise plus inter-cell interference folded into a Gaussian term."""
    if cfg.num_cells == 1:
        return cfg.noise_variance
    interference = cfg.activity_prob / cfg.seq_len * cfg.users_per_cell * (cfg.num_cells - 1)
    return interference * second_moment_out_of_cell(cfg) + cfg.noise_variance
