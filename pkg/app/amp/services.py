import logging
from typing import Sequence

import numpy as np

from amp.denoiser import denoise, denoise_jacobian_trace_mean
from amp.models import AmpConfig, AmpIteration, MatchedFilterOutput
from core.errors import ConfigurationError, DimensionMismatchError, DivergenceError
from core.types import ComplexMatrix, FloatArray

logger = logging.getLogger(__name__)

# iterations exempt from the monotonicity check
MONOTONE_GRACE = 3


def _is_monotone(taus: Sequence[float]) -> bool:
    tail = np.asarray(taus[MONOTONE_GRACE:])
    return bool(np.all(np.diff(tail) <= 1e-12 * tail[:-1])) if len(tail) > 1 else True


def run_amp(
    received: ComplexMatrix,
    signatures: ComplexMatrix,
    gains: FloatArray,
    activity_prob: float,
    noise_variance: float,
    cfg: AmpConfig,
    se_tau_sq: Sequence[float] | None = None,
) -> MatchedFilterOutput:
    """MMV-AMP with the Bayesian row denoiser.

    ``signatures`` holds one column per user being detected (K = N for the
    non-cooperative mode, K = N·cells for interference recovery); anything not in
    it acts as noise. The Onsager coefficient is K/L.
    """
    y = np.asarray(received)
    s = np.asarray(signatures)
    g = np.asarray(gains, dtype=float)
    if y.ndim != 2 or s.ndim != 2 or s.shape[0] != y.shape[0] or g.shape != (s.shape[1],):
        raise DimensionMismatchError(
            f"received {y.shape}, signatures {s.shape} and gains {g.shape} are inconsistent"
        )
    if cfg.tau_mode == "state_evolution" and not se_tau_sq:
        raise ConfigurationError("tau_mode=state_evolution needs a state-evolution sequence")

    length, m = y.shape
    k = s.shape[1]
    # numerical floor only: the residual estimate may dip below the thermal noise
    floor = max(1e-6 * noise_variance, 1e-20 * float(np.vdot(y, y).real) / (length * m), np.finfo(float).tiny)

    def tau_at(z: ComplexMatrix, t: int) -> float:
        if cfg.tau_mode == "state_evolution":
            assert se_tau_sq is not None
            return float(se_tau_sq[min(t, len(se_tau_sq) - 1)])
        return max(float(np.vdot(z, z).real) / (length * m), floor)

    x = np.zeros((k, m), dtype=complex)
    z = y.astype(complex)
    tau_sq = tau_at(z, 0)
    trace = [AmpIteration(iteration=0, tau_sq=tau_sq, residual_norm=float(np.linalg.norm(z)))]
    converged = False
    for t in range(1, cfg.max_iters + 1):
        rows = s.conj().T @ z + x
        x_next = denoise(rows, g, tau_sq, activity_prob)
        z_next = y - s @ x_next
        if cfg.onsager:
            z_next += (k / length) * z @ denoise_jacobian_trace_mean(rows, g, tau_sq, activity_prob)
        if cfg.damping:
            # estimate and residual are blended with one weight, Onsager term included
            x_next = (1 - cfg.damping) * x_next + cfg.damping * x
            z_next = (1 - cfg.damping) * z_next + cfg.damping * z
        if not (np.all(np.isfinite(x_next)) and np.all(np.isfinite(z_next))):
            raise DivergenceError(t)

        tau_next = tau_at(z_next, t)
        trace.append(AmpIteration(iteration=t, tau_sq=tau_next, residual_norm=float(np.linalg.norm(z_next))))
        logger.debug("amp iteration %d tau_sq=%.6g", t, tau_next)
        x, z = x_next, z_next
        change = abs(tau_next - tau_sq) / tau_sq
        tau_sq = tau_next
        if change < cfg.convergence_tol:
            converged = True
            break

    if not converged:
        logger.warning("AMP stopped after %d iterations without converging", cfg.max_iters)
    monotone = _is_monotone([step.tau_sq for step in trace])
    if not monotone:
        logger.warning("AMP effective noise was not monotone after the grace window")

    rows = s.conj().T @ z + x
    return MatchedFilterOutput(
        rows=rows,
        squared_norms=np.sum(np.abs(rows) ** 2, axis=1),
        tau_sq_final=tau_sq,
        gains=g,
        estimate=x,
        iterations=len(trace) - 1,
        converged=converged,
        monotone=monotone,
        trace=trace,
    )
