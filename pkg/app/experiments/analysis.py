import functools
import logging

import numpy as np

from core.errors import ConfigurationError
from detection.models import ErrorProfile, ProfileSource
from detection.services import equal_error_threshold
from experiments.models import Analysis, ExperimentSpec
from geometry.models import CellLayout, NetworkConfig, UserPlacement
from geometry.services import build_layout, closest_bs, large_scale_gains, sample_users
from quantize.services import build_spec, quantized_equal_error
from state_evolution.models import Architecture, StateEvolutionTrace
from state_evolution.services import scope_radius, se_fixed_point_tin, se_partial_recovery

logger = logging.getLogger(__name__)

CENTRE = 0


@functools.lru_cache(maxsize=16)
def deployment(cfg: NetworkConfig, seed: int) -> tuple[CellLayout, UserPlacement]:
    layout = build_layout(cfg)
    return layout, sample_users(cfg, layout, seed)


@functools.lru_cache(maxsize=64)
def state_evolution(cfg: NetworkConfig, architecture: Architecture, scope_cells: int) -> StateEvolutionTrace:
    if architecture == Architecture.TIN:
        return se_fixed_point_tin(cfg)
    radius = scope_radius(cfg, scope_cells)
    return se_partial_recovery(cfg, radius, Architecture.COOP if radius >= cfg.network_radius else None)


def scope(layout: CellLayout, spec: ExperimentSpec, bs: int) -> list[int]:
    if spec.architecture == Architecture.TIN:
        return [bs]
    return layout.cells_within(bs, spec.detection_tiers)


def analyse(spec: ExperimentSpec) -> Analysis:
    cfg = spec.network
    layout, placement = deployment(cfg, spec.seed)
    gains = large_scale_gains(cfg, layout, placement)[:, CENTRE, :]
    serving = closest_bs(layout, placement, CENTRE, spec.bbn)
    for bs in np.unique(serving):
        if CENTRE not in scope(layout, spec, int(bs)):
            raise ConfigurationError(
                f"BS {bs} serves centre-cell users but does not detect them; raise detection_tiers"
            )
    trace = state_evolution(cfg, spec.architecture, len(scope(layout, spec, CENTRE)))
    tau_sq = trace.tau_sq_inf

    serving_gains = np.take_along_axis(gains.T, serving, axis=1)
    quantizer = None
    if spec.quantizer is not None:
        zeta = spec.quantizer.coverage(cfg.antennas)
        quantizer = build_spec(serving_gains, tau_sq, cfg.antennas, cfg.activity_prob, spec.quantizer.q_bits, zeta)
    thresholds = np.empty(cfg.users_per_cell)
    p_miss = np.empty(cfg.users_per_cell)
    p_false = np.empty(cfg.users_per_cell)
    fallback = False
    for n, g in enumerate(serving_gains):
        if quantizer is not None:
            # forwarded norms are codewords, so the threshold sits between atoms of the quantized statistic
            thresholds[n], pair = quantized_equal_error(g, quantizer.l_max[n], quantizer.q_bits, tau_sq, cfg.antennas)
        elif spec.bbn == 1:
            # single-BS threshold is on ‖x̃‖², moved onto Δ‖x̃‖²
            level, pair = equal_error_threshold(float(g[0]), tau_sq, cfg.antennas)
            thresholds[n] = level * (1 / tau_sq - 1 / (g[0] ** 2 + tau_sq))
        else:
            thresholds[n], pair = equal_error_threshold(g, tau_sq, cfg.antennas)
        p_miss[n], p_false[n] = pair
        fallback |= pair.fallback

    profile = ErrorProfile(
        source=ProfileSource.ANALYTIC,
        p_miss=p_miss,
        p_false=p_false,
        thresholds=thresholds,
        gains=gains[CENTRE],
        fallback=fallback,
    )
    logger.info(
        "analysis %s bbn=%d: tau_sq_inf=%.4g cell-edge=%.4g", spec.architecture, spec.bbn, tau_sq, profile.cell_edge_95
    )
    return Analysis(
        spec=spec,
        layout=layout,
        placement=placement,
        gains=gains,
        serving=serving,
        trace=trace,
        thresholds=thresholds,
        profile=profile,
        quantizer=quantizer,
    )
