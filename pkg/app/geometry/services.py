import logging
import math
from dataclasses import dataclass

import numpy as np

from core.errors import ConfigurationError, UnsupportedParameterError
from core.rng import make_rng
from core.types import FloatArray
from geometry.models import CellLayout, FadingDist, NetworkConfig, UserPlacement

logger = logging.getLogger(__name__)

STREAM_PLACEMENT = 1


@dataclass(kw_only=True)
class LayoutRow:
    bs_id: int
    x: float
    y: float


def tier_count(num_cells: int) -> int:
    """Rings around the centre cell for a centred hexagonal number of cells."""
    tiers = round((-3 + math.sqrt(9 + 12 * (num_cells - 1))) / 6)
    if 3 * tiers * (tiers + 1) + 1 != num_cells:
        raise ConfigurationError(f"{num_cells} cells do not form complete hexagonal tiers (1, 7, 19, 37, ...)")
    return tiers


def build_layout(cfg: NetworkConfig) -> CellLayout:
    tiers = tier_count(cfg.num_cells)
    e1 = cfg.bs_spacing * np.array([math.cos(math.pi / 6), math.sin(math.pi / 6)])
    e2 = cfg.bs_spacing * np.array([0.0, 1.0])
    span = range(-tiers, tiers + 1)
    axial = [(q, r) for q in span for r in span if max(abs(q), abs(r), abs(q + r)) <= tiers]
    positions = np.array([q * e1 + r * e2 for q, r in axial])
    ring = np.array([max(abs(q), abs(r), abs(q + r)) for q, r in axial])
    angle = np.mod(np.arctan2(positions[:, 1], positions[:, 0]), 2 * np.pi)
    order = np.lexsort((np.round(angle, 9), ring))
    return CellLayout(spacing=cfg.bs_spacing, positions=positions[order], axial=np.array(axial)[order])


def layout_rows(layout: CellLayout) -> list[LayoutRow]:
    return [LayoutRow(bs_id=i, x=float(x), y=float(y)) for i, (x, y) in enumerate(layout.positions)]


def sample_users(cfg: NetworkConfig, layout: CellLayout, rng_seed: int) -> UserPlacement:
    """Uniform user drop inside every cell: hexagons by rejection sampling, discs by radius and angle."""
    rng = make_rng(rng_seed, STREAM_PLACEMENT)
    n = cfg.users_per_cell
    radius = layout.cell_radius
    half_height = layout.spacing / 2
    positions = np.empty((layout.num_cells, n, 2))
    if cfg.user_region == "disc":
        for cell in range(layout.num_cells):
            distance = sample_disc_distances(0.0, radius, n, rng)
            angle = rng.uniform(0, 2 * np.pi, n)
            offsets = np.column_stack([distance * np.cos(angle), distance * np.sin(angle)])
            positions[cell] = layout.positions[cell] + offsets
        return UserPlacement(positions=positions)
    for cell in range(layout.num_cells):
        accepted = np.empty((0, 2))
        while len(accepted) < n:
            batch = np.column_stack(
                [rng.uniform(-radius, radius, 2 * n), rng.uniform(-half_height, half_height, 2 * n)]
            )
            batch = batch + layout.positions[cell]
            accepted = np.vstack([accepted, batch[layout.contains(cell, batch)]])
        positions[cell] = accepted[:n]
    return UserPlacement(positions=positions)


def large_scale_gains(cfg: NetworkConfig, layout: CellLayout, placement: UserPlacement) -> FloatArray:
    """g for every (receiver BS, home cell, user); distances below the floor are clamped."""
    return np.asarray(cfg.gain(placement.distances(layout)))


def closest_bs(layout: CellLayout, placement: UserPlacement, cell: int, count: int) -> np.ndarray:
    """Indices of the ``count`` nearest BSs for each user of ``cell``, nearest first."""
    if not 1 <= count <= layout.num_cells:
        raise ConfigurationError(f"cooperation size {count} outside [1, {layout.num_cells}]")
    d = placement.distances(layout)[:, cell, :]  # (B, N)
    return np.argsort(d, axis=0, kind="stable")[:count].T


def fading_dist(cfg: NetworkConfig, r_min: float, r_max: float) -> FadingDist:
    if not 0 <= r_min < r_max:
        raise FadingDist.InvalidError(f"need 0 <= r_min < r_max, got r_min={r_min}, r_max={r_max}")
    alpha, beta = cfg.pathloss_alpha, cfg.pathloss_beta
    a = 40 / beta * 10 ** (-2 * alpha / beta)

    def eps(r: float) -> float:
        return math.inf if r == 0 else 10 ** (-(alpha + beta * math.log10(r)) / 20)

    return FadingDist(
        a=a,
        gamma=40 / beta + 1,
        eps_min=eps(r_max),
        eps_max=eps(r_min),
        r_min=r_min,
        r_max=r_max,
        alpha=alpha,
        beta=beta,
    )


def sample_disc_distances(r_min: float, r_max: float, size: int, rng: np.random.Generator) -> FloatArray:
    return np.sqrt(r_min**2 + rng.random(size) * (r_max**2 - r_min**2))


def second_moment(cfg: NetworkConfig, r_min: float, r_max: float) -> float:
    """E[G²] for users uniform on the annulus [r_min, r_max]."""
    beta = cfg.pathloss_beta
    if beta <= 20:
        raise UnsupportedParameterError("pathloss_beta", f"closed-form second moment needs beta > 20, got {beta}")
    if not 0 < r_min <= r_max:
        raise FadingDist.InvalidError(f"need 0 < r_min <= r_max, got r_min={r_min}, r_max={r_max}")
    scale = 10 ** (-cfg.pathloss_alpha / 10)
    exponent = 2 - beta / 10
    if r_max - r_min <= 1e-9 * r_min:
        return scale * r_min ** (-beta / 10)
    return scale * (r_min**exponent - r_max**exponent) / ((1 - beta / 20) * (r_min**2 - r_max**2))


def second_moment_out_of_cell(cfg: NetworkConfig) -> float:
    return second_moment(cfg, cfg.cell_radius, cfg.network_radius)


def interference_limit_large_b(cfg: NetworkConfig) -> float:
    """Limit of N(B-1)λ/L·E[G_/b²] as the network grows without bound."""
    beta = cfg.pathloss_beta
    if beta <= 20:
        raise UnsupportedParameterError("pathloss_beta", f"the interference limit needs beta > 20, got {beta}")
    r_cell = cfg.cell_radius
    return (
        (cfg.num_cells / cfg.network_radius**2)
        * (cfg.users_per_cell / cfg.seq_len)
        * r_cell ** (2 - beta / 10)
        * 10 ** (-cfg.pathloss_alpha / 10)
        / ((beta / 20 - 1) / cfg.activity_prob)
    )


def snr_at_reference_db(cfg: NetworkConfig, distance: float = 1000.0) -> float:
    """Per-sample receive SNR of a user at ``distance`` before spreading gain."""
    return cfg.tx_power_dbm - float(cfg.pathloss_db(distance)) - cfg.noise_dbm
