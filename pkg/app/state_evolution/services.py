import logging
import math

from core.errors import DomainError
from geometry.models import NetworkConfig
from geometry.services import fading_dist, second_moment
from state_evolution.models import Architecture, StateEvolutionTrace, TraceRow
from state_evolution.special import phi_table, psi_tail_integral

logger = logging.getLogger(__name__)

MAX_ITERATIONS = 500
TOLERANCE = 1e-9


def initial_tau_sq(cfg: NetworkConfig) -> float:
    """Effective noise at t=0: with X⁰=0 every user in the network is noise."""
    load = cfg.activity_prob * cfg.users_per_cell * cfg.num_cells / cfg.seq_len
    return cfg.noise_variance + load * second_moment(cfg, cfg.min_distance, cfg.network_radius)


def se_rhs(cfg: NetworkConfig, tau_sq: float, detection_radius: float) -> float:
    """One state-evolution step when users within ``detection_radius`` are recovered.

    Users beyond the radius contribute their average power as extra noise; the
    recovered ones contribute the denoiser MSE through the ψ integral.
    """
    r_cell, r_net = cfg.cell_radius, cfg.network_radius
    load = cfg.activity_prob * cfg.users_per_cell / cfg.seq_len
    dist = fading_dist(cfg, 0.0, r_cell)
    table = phi_table(cfg.antennas, cfg.activity_prob)
    eps = float(cfg.gain(detection_radius))
    recovered = load * dist.a / r_cell**2 * psi_tail_integral(table, eps, tau_sq, dist.gamma)
    unrecovered = 0.0
    if detection_radius < r_net:
        share = (r_net**2 - detection_radius**2) / r_cell**2
        unrecovered = load * share * second_moment(cfg, detection_radius, r_net)
    return cfg.noise_variance + unrecovered + recovered


def _architecture(cfg: NetworkConfig, radius: float) -> Architecture:
    if radius >= cfg.network_radius:
        return Architecture.COOP
    if radius <= cfg.cell_radius:
        return Architecture.TIN
    return Architecture.PARTIAL


def se_partial_recovery(
    cfg: NetworkConfig, detection_radius: float, architecture: Architecture | None = None
) -> StateEvolutionTrace:
    r_cell, r_net = cfg.cell_radius, cfg.network_radius
    if not r_cell * (1 - 1e-12) <= detection_radius <= r_net * (1 + 1e-12):
        raise DomainError(f"detection radius {detection_radius} outside [{r_cell}, {r_net}]")
    detection_radius = min(max(detection_radius, r_cell), r_net)

    taus = [initial_tau_sq(cfg)]
    converged = False
    for _ in range(MAX_ITERATIONS):
        tau_next = se_rhs(cfg, taus[-1], detection_radius)
        change = abs(tau_next - taus[-1]) / taus[-1]
        taus.append(tau_next)
        if change < TOLERANCE:
            converged = True
            break
    architecture = architecture or _architecture(cfg, detection_radius)
    if not converged:
        logger.warning("state evolution (%s) did not converge in %d iterations", architecture, MAX_ITERATIONS)
    return StateEvolutionTrace(
        architecture=architecture,
        tau_sq_seq=taus,
        tau_sq_inf=taus[-1],
        iterations=len(taus) - 1,
        converged=converged,
        detection_radius=detection_radius,
        noise_floor=cfg.noise_variance,
    )


def se_fixed_point_tin(cfg: NetworkConfig) -> StateEvolutionTrace:
    return se_partial_recovery(cfg, cfg.cell_radius, Architecture.TIN)


def se_fixed_point_coop(cfg: NetworkConfig) -> StateEvolutionTrace:
    return se_partial_recovery(cfg, cfg.network_radius, Architecture.COOP)


def scope_radius(cfg: NetworkConfig, scope_cells: int) -> float:
    """Disc radius equivalent to recovering ``scope_cells`` cells."""
    return min(math.sqrt(scope_cells) * cfg.cell_radius, cfg.network_radius)


def trace_rows(trace: StateEvolutionTrace) -> list[TraceRow]:
    return [TraceRow(t=t, tau_sq=tau) for t, tau in enumerate(trace.tau_sq_seq)]
