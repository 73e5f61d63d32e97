import logging
from typing import Sequence

import numpy as np

from amp.models import AmpIteration, MatchedFilterOutput
from amp.services import run_amp
from core.rng import derive_seed, make_rng
from detection.empirical import TrialCounts, count_decisions
from detection.services import llr
from experiments.analysis import CENTRE, scope
from experiments.models import Analysis, BatchResult
from quantize.services import quantize
from scenario.models import ScenarioInstance
from scenario.services import synthesize

logger = logging.getLogger(__name__)

STREAM_DECOUPLED = 100


def _aggregate_llr(analysis: Analysis, norms: np.ndarray, taus: np.ndarray) -> np.ndarray:
    """Σ_j LLR_j per user; ``norms`` and ``taus`` are (N, bbn)."""
    if analysis.quantizer is not None:
        norms = quantize(norms, analysis.quantizer)
    return np.sum(llr(norms, analysis.serving_gains(), taus, analysis.spec.network.antennas), axis=1)


def _detect(analysis: Analysis, scenario: ScenarioInstance, bs: int) -> MatchedFilterOutput:
    spec = analysis.spec
    cells = scope(analysis.layout, spec, bs)
    return run_amp(
        scenario.observation(bs),
        scenario.signatures[:, scenario.columns(cells)],
        scenario.large_scale[bs][cells].ravel(),
        spec.network.activity_prob,
        scenario.noise_variance,
        spec.amp,
    )


def centre_trace(analysis: Analysis, trial: int = 0) -> list[AmpIteration]:
    """Per-iteration AMP trace at the centre BS for one realization."""
    spec = analysis.spec
    scenario = synthesize(
        spec.network, analysis.layout, derive_seed(spec.seed, trial), placement=analysis.placement, receivers=(CENTRE,)
    )
    return _detect(analysis, scenario, CENTRE).trace


def _amp_trial(analysis: Analysis, trial: int) -> tuple[TrialCounts, float]:
    spec = analysis.spec
    cfg = spec.network
    n = cfg.users_per_cell
    receivers = tuple(sorted({int(j) for j in analysis.serving.ravel()}))
    scenario = synthesize(
        cfg, analysis.layout, derive_seed(spec.seed, trial), placement=analysis.placement, receivers=receivers
    )
    norms = np.zeros((cfg.num_cells, n))
    tau_by_bs = np.full(cfg.num_cells, np.nan)
    for bs in receivers:
        output = _detect(analysis, scenario, bs)
        offset = scope(analysis.layout, spec, bs).index(CENTRE) * n
        norms[bs] = output.squared_norms[offset : offset + n]
        tau_by_bs[bs] = output.tau_sq_final

    stacked = norms[analysis.serving, np.arange(n)[:, None]]
    if spec.tau_source == "empirical":
        taus = tau_by_bs[analysis.serving]
    else:
        taus = np.full(stacked.shape, analysis.tau_sq)
    statistic = _aggregate_llr(analysis, stacked, taus)
    counts = count_decisions(statistic, analysis.llr_thresholds(), scenario.activities[CENTRE])
    return counts, float(tau_by_bs[CENTRE])


def _decoupled_trial(analysis: Analysis, trial: int) -> TrialCounts:
    """Draws ‖x̃_j‖² from the scalar channel x̃ = x + CN(0, τ²I) at the SE noise level."""
    spec = analysis.spec
    cfg = spec.network
    rng = make_rng(spec.seed, STREAM_DECOUPLED, trial)
    activity = rng.random(cfg.users_per_cell) < cfg.activity_prob
    g_sq = analysis.serving_gains() ** 2
    variance = activity[:, None] * g_sq + analysis.tau_sq
    norms = variance * rng.gamma(cfg.antennas, size=g_sq.shape)
    statistic = _aggregate_llr(analysis, norms, np.full(g_sq.shape, analysis.tau_sq))
    return count_decisions(statistic, analysis.llr_thresholds(), activity)


def run_batch(analysis: Analysis, trials: Sequence[int]) -> BatchResult:
    counts = TrialCounts.empty(analysis.spec.network.users_per_cell)
    taus: list[float] = []
    for trial in trials:
        if analysis.spec.engine == "decoupled":
            counts = counts.merge(_decoupled_trial(analysis, trial))
            continue
        trial_counts, tau_sq = _amp_trial(analysis, trial)
        counts = counts.merge(trial_counts)
        taus.append(tau_sq)
    logger.debug("finished trials %s", list(trials))
    return BatchResult(counts=counts, centre_tau_sq=taus)
