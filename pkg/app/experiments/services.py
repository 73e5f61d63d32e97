import asyncio
import logging
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from amp.models import AmpIteration
from core.errors import ApplicationError, ExperimentError, UnknownParameterError
from core.settings import Settings
from core.tables import TableWriter
from detection.empirical import TrialCounts, cdf_sup_gap, empirical_error_profile
from detection.models import CdfRow, ErrorProfile, ProfileRow, RocRow
from detection.services import equal_error_threshold, roc_curve
from experiments.analysis import CENTRE, analyse, deployment
from experiments.models import ExperimentResult, ExperimentSpec, SweepRow, ValidationRow
from experiments.trials import centre_trace, run_batch
from geometry.models import NetworkConfig
from geometry.services import LayoutRow, large_scale_gains, layout_rows
from quantize.models import FronthaulQuantization
from quantize.services import LmaxTable, fronthaul_bits
from state_evolution.models import Architecture, TraceRow
from state_evolution.services import se_fixed_point_coop, se_fixed_point_tin, se_partial_recovery, trace_rows

logger = logging.getLogger(__name__)

SWEEP_TABLES = {
    "M": "fig6_antennas",
    "L": "fig7_seq_len",
    "B_bn": "fig5_bbn",
    "Q": "quantize_sweep",
    "zeta": "quantize_sweep",
    "detection_radius": "fig3_tau_vs_radius",
}
TRADEOFF_PERCENTILES = (50.0, 95.0)
SE_AGREEMENT_LIMIT = 0.05
CDF_GAP_LIMIT = 0.05


def cdf_table_name(spec: ExperimentSpec) -> str:
    if spec.quantizer is not None:
        return "fig8_cdf" if spec.network.antennas == 1 else "fig9_cdf"
    return "fig2_cdf" if spec.architecture == Architecture.TIN else "fig4_cdf"


def profile_rows(profile: ErrorProfile) -> list[ProfileRow]:
    return [
        ProfileRow(
            source=str(profile.source),
            cell=CENTRE,
            user=n,
            g=float(profile.gains[n]),
            threshold=float(profile.thresholds[n]),
            p_miss=float(profile.p_miss[n]),
            p_false=float(profile.p_false[n]),
            p_equal=float(profile.p_equal[n]),
            defined=bool(profile.defined[n]),
        )
        for n in range(len(profile.p_miss))
    ]


def cdf_rows(profile: ErrorProfile) -> list[CdfRow]:
    values = profile.cdf
    return [
        CdfRow(source=str(profile.source), percentile=100.0 * (i + 1) / len(values), p=float(p))
        for i, p in enumerate(values)
    ]


def tradeoff_rows(result: ExperimentResult, points: int = 200) -> list[RocRow]:
    analysis = result.analysis
    p_equal = analysis.profile.p_equal
    serving_gains = analysis.serving_gains()
    rows = []
    for percentile in TRADEOFF_PERCENTILES:
        user = int(np.argmin(np.abs(p_equal - np.percentile(p_equal, percentile))))
        curve = roc_curve(serving_gains[user], analysis.tau_sq, result.spec.network.antennas, points)
        rows.extend(
            RocRow(user=user, percentile=percentile, threshold=l, p_false=pair.p_false, p_miss=pair.p_miss)
            for l, pair in curve
        )
    return rows


def _with_network(spec: ExperimentSpec, **changes) -> ExperimentSpec:
    network = NetworkConfig(**{**dict(spec.network), **changes})
    return ExperimentSpec(**{**dict(spec), "network": network})


def _with(spec: ExperimentSpec, **changes) -> ExperimentSpec:
    return ExperimentSpec(**{**dict(spec), **changes})


class ExperimentService:
    """Runs experiments, sweeps and cross-checks and writes their CSV tables.

    Trials are split into batches of ``trials_per_batch`` and executed on a
    pool of at most ``settings.WORKERS`` threads. Batch results are merged in
    trial order, so the worker count never changes the output.
    """

    def __init__(self, settings: Settings, writer: TableWriter):
        self.settings = settings
        self.writer = writer
        self._slots = asyncio.Semaphore(settings.WORKERS)

    async def predict(self, spec: ExperimentSpec) -> ExperimentResult:
        try:
            analysis = await asyncio.to_thread(analyse, spec)
        except ApplicationError as e:
            raise ExperimentError(f"predict {spec.architecture} bbn={spec.bbn}", e) from e
        return ExperimentResult(analysis=analysis)

    async def run_experiment(self, spec: ExperimentSpec) -> ExperimentResult:
        context = f"simulate {spec.architecture} bbn={spec.bbn} seed={spec.seed}"
        try:
            analysis = await asyncio.to_thread(analyse, spec)
            batches = [
                range(start, min(start + spec.trials_per_batch, spec.trials))
                for start in range(0, spec.trials, spec.trials_per_batch)
            ]

            async def run(trials: range):
                async with self._slots:
                    return await asyncio.to_thread(run_batch, analysis, trials)

            results = await asyncio.gather(*(run(batch) for batch in batches))
        except ApplicationError as e:
            raise ExperimentError(context, e) from e

        counts = TrialCounts.empty(spec.network.users_per_cell)
        taus: list[float] = []
        for result in results:
            counts = counts.merge(result.counts)
            taus.extend(result.centre_tau_sq)
        empirical = empirical_error_profile(counts, analysis.thresholds, analysis.profile.gains)
        logger.info(
            "%s: cell-edge analytic=%.4g empirical=%.4g over %d trials",
            context,
            analysis.profile.cell_edge_95,
            empirical.cell_edge_95,
            spec.trials,
        )
        return ExperimentResult(analysis=analysis, empirical=empirical, centre_tau_sq=taus)

    def write(self, result: ExperimentResult, out_dir: Path) -> list[Path]:
        spec = result.spec
        analysis = result.analysis
        paths = []
        profiles = [analysis.profile] + ([result.empirical] if result.empirical is not None else [])
        if "profile" in spec.outputs:
            rows = [row for profile in profiles for row in profile_rows(profile)]
            paths.append(self.writer.write(out_dir / "profile.csv", "profile", rows, ProfileRow))
        if "cdf" in spec.outputs:
            name = cdf_table_name(spec)
            cdf = [row for profile in profiles for row in cdf_rows(profile)]
            paths.append(self.writer.write(out_dir / f"{name}.csv", name, cdf, CdfRow))
        if "se_trace" in spec.outputs:
            paths.append(self.writer.write(out_dir / "se_trace.csv", "se_trace", trace_rows(analysis.trace), TraceRow))
        if "tradeoff" in spec.outputs:
            curves = tradeoff_rows(result)
            paths.append(self.writer.write(out_dir / "fig1_tradeoff.csv", "fig1_tradeoff", curves, RocRow))
        if "layout" in spec.outputs:
            paths.append(self.writer.write(out_dir / "layout.csv", "layout", layout_rows(analysis.layout), LayoutRow))
        if analysis.quantizer is not None:
            gains = analysis.serving_gains()
            table = LmaxTable.build(
                float(gains.min()),
                float(gains.max()),
                analysis.tau_sq,
                spec.network.antennas,
                spec.network.activity_prob,
                analysis.quantizer.zeta,
            )
            paths.append(table.export(self.writer, out_dir / "lmax_table.csv"))
        return paths

    async def _sweep_point(self, spec: ExperimentSpec, parameter: str, value: float, simulate: bool) -> SweepRow:
        result = await (self.run_experiment(spec) if simulate else self.predict(spec))
        bits = 0
        if spec.quantizer is not None:
            bits = fronthaul_bits(spec.quantizer.q_bits, spec.network.users_per_cell, spec.bbn)
        return SweepRow(
            parameter=parameter,
            value=float(value),
            architecture=str(spec.architecture),
            tau_sq_inf=result.analysis.tau_sq,
            cell_edge_analytic=result.analysis.profile.cell_edge_95,
            cell_edge_empirical=result.empirical.cell_edge_95 if result.empirical is not None else math.nan,
            fronthaul_bits=bits,
        )

    async def _radius_point(self, spec: ExperimentSpec, radius: float) -> SweepRow:
        cfg = spec.network
        trace = await asyncio.to_thread(se_partial_recovery, cfg, radius)
        layout, placement = deployment(cfg, spec.seed)
        own = large_scale_gains(cfg, layout, placement)[CENTRE, CENTRE]
        pairs = [equal_error_threshold(float(g), trace.tau_sq_inf, cfg.antennas)[1] for g in own]
        edge = float(np.percentile([(pair.p_miss + pair.p_false) / 2 for pair in pairs], 95))
        return SweepRow(
            parameter="detection_radius",
            value=float(radius),
            architecture=str(trace.architecture),
            tau_sq_inf=trace.tau_sq_inf,
            cell_edge_analytic=edge,
            cell_edge_empirical=math.nan,
            fronthaul_bits=0,
        )

    def _point_spec(self, spec: ExperimentSpec, parameter: str, value: float) -> ExperimentSpec:
        match parameter:
            case "M":
                return _with_network(spec, antennas=int(value))
            case "L":
                return _with_network(spec, seq_len=int(value))
            case "B_bn":
                architecture = Architecture.COOP if int(value) > 1 else spec.architecture
                return _with(spec, bbn=int(value), architecture=architecture)
            case "Q":
                zeta = spec.quantizer.zeta if spec.quantizer is not None else None
                return _with(spec, quantizer=FronthaulQuantization(q_bits=int(value), zeta=zeta))
            case "zeta":
                q_bits = spec.quantizer.q_bits if spec.quantizer is not None else 3
                return _with(spec, quantizer=FronthaulQuantization(q_bits=q_bits, zeta=float(value)))
        raise UnknownParameterError(parameter)

    async def sweep(
        self, spec: ExperimentSpec, parameter: str, values: Sequence[float], simulate: bool = False
    ) -> list[SweepRow]:
        """One row per value, in the order given."""
        if parameter not in SWEEP_TABLES:
            raise UnknownParameterError(parameter)
        rows = []
        for value in values:
            logger.info("sweep %s=%s", parameter, value)
            if parameter == "detection_radius":
                rows.append(await self._radius_point(spec, float(value)))
            else:
                point = self._point_spec(spec, parameter, value)
                rows.append(await self._sweep_point(point, parameter, value, simulate))
        return rows

    async def quantize_sweep(
        self, spec: ExperimentSpec, q_bits: Sequence[int], simulate: bool = False
    ) -> list[SweepRow]:
        """Fronthaul bits against cell-edge error, with the unquantized run as the first row."""
        if spec.architecture == Architecture.TIN:
            spec = _with(spec, architecture=Architecture.COOP)
        baseline = await self._sweep_point(_with(spec, quantizer=None), "Q", math.inf, simulate)
        return [baseline] + await self.sweep(spec, "Q", q_bits, simulate)

    def write_sweep(self, rows: list[SweepRow], parameter: str, out_dir: Path) -> Path:
        name = SWEEP_TABLES[parameter]
        return self.writer.write(out_dir / f"{name}.csv", name, rows, SweepRow)

    async def validate(self, spec: ExperimentSpec) -> list[ValidationRow]:
        """Analytic-vs-empirical cross-checks at the requested network scale."""
        rows = []
        single = _with_network(spec, num_cells=1, user_region="disc")
        single = _with(single, architecture=Architecture.TIN, bbn=1, quantizer=None, engine="amp")
        result = await self.run_experiment(single)
        measured = float(np.mean(result.centre_tau_sq))
        gap = abs(measured - result.analysis.tau_sq) / result.analysis.tau_sq
        rows.append(
            ValidationRow(
                check="se_vs_amp_tau_sq", value=gap, limit=SE_AGREEMENT_LIMIT, passed=gap < SE_AGREEMENT_LIMIT
            )
        )

        tin = await asyncio.to_thread(se_fixed_point_tin, spec.network)
        coop = await asyncio.to_thread(se_fixed_point_coop, spec.network)
        ratio = tin.tau_sq_inf / coop.tau_sq_inf
        rows.append(ValidationRow(check="tin_over_rec_tau_sq", value=ratio, limit=1.0, passed=ratio > 1.0))

        for architecture, bbn in ((Architecture.TIN, 1), (Architecture.COOP, spec.bbn)):
            result = await self.run_experiment(_with(spec, architecture=architecture, bbn=bbn, quantizer=None))
            assert result.empirical is not None
            gap = cdf_sup_gap(result.analysis.profile.p_equal, result.empirical.p_equal)
            rows.append(
                ValidationRow(
                    check=f"cdf_sup_gap_{architecture}", value=gap, limit=CDF_GAP_LIMIT, passed=gap < CDF_GAP_LIMIT
                )
            )
        for row in rows:
            log = logger.info if row.passed else logger.warning
            log("%s: %.4g (limit %.4g)", row.check, row.value, row.limit)
        return rows

    async def amp_trace(self, spec: ExperimentSpec, out_dir: Path, trial: int = 0) -> Path:
        analysis = await asyncio.to_thread(analyse, spec)
        trace = await asyncio.to_thread(centre_trace, analysis, trial)
        return self.writer.write(out_dir / "amp_trace.csv", "amp_trace", trace, AmpIteration)

    def write_validation(self, rows: list[ValidationRow], out_dir: Path) -> Path:
        return self.writer.write(out_dir / "validation.csv", "validation", rows, ValidationRow)
