import math

import numpy as np
import pytest

from core.errors import ConfigurationError, ExperimentError, UnknownParameterError
from core.settings import Settings
from core.tables import TableWriter
from detection.services import pm_pf_massive_analytic
from experiments.models import ExperimentSpec, SweepRow
from experiments.services import ExperimentService, cdf_table_name
from geometry.models import NetworkConfig
from quantize.models import FronthaulQuantization
from state_evolution.models import Architecture


def spec_with(base: ExperimentSpec, **changes) -> ExperimentSpec:
    return ExperimentSpec(**{**dict(base), **changes})


async def test_smoke_run_writes_tables(experiment_service, tiny_spec, tmp_path):
    result = await experiment_service.run_experiment(tiny_spec)
    paths = experiment_service.write(result, tmp_path)
    names = sorted(p.name for p in paths)
    assert names == ['fig1_tradeoff.csv', 'fig2_cdf.csv', 'layout.csv', 'profile.csv', 'se_trace.csv']
    for path in paths:
        assert path.read_text().startswith('# schema=v1 table=')
    assert len(result.centre_tau_sq) == 1
    assert len(result.empirical.p_miss) == 4


async def test_predict_has_no_empirical_profile(experiment_service, tiny_spec):
    result = await experiment_service.predict(tiny_spec)
    assert result.empirical is None
    assert len(result.analysis.profile.p_miss) == 4
    assert result.analysis.profile.p_equal.max() <= 0.5


@pytest.mark.parametrize('engine', ['amp', 'decoupled'])
async def test_same_seed_same_bytes(experiment_service, network, tmp_path, engine):
    spec = ExperimentSpec(network=network, trials=6, trials_per_batch=2, engine=engine)
    for name in ('a', 'b'):
        experiment_service.write(await experiment_service.run_experiment(spec), tmp_path / name)
    for path in sorted((tmp_path / 'a').iterdir()):
        assert path.read_bytes() == (tmp_path / 'b' / path.name).read_bytes(), path.name


async def test_worker_count_does_not_change_results(experiment_service, network, tmp_path):
    spec = ExperimentSpec(network=network, trials=20, trials_per_batch=3, engine='decoupled')
    serial = ExperimentService(Settings(WORKERS=1), TableWriter(Settings()))
    first = await experiment_service.run_experiment(spec)
    second = await serial.run_experiment(spec)
    assert np.array_equal(first.empirical.p_miss, second.empirical.p_miss, equal_nan=True)
    assert np.array_equal(first.empirical.p_false, second.empirical.p_false, equal_nan=True)


@pytest.mark.parametrize('architecture, bbn', [(Architecture.TIN, 1), (Architecture.COOP, 2)])
async def test_decoupled_errors_match_analytic(experiment_service, desk_network, architecture, bbn):
    spec = ExperimentSpec(network=desk_network, architecture=architecture, bbn=bbn, trials=1000, engine='decoupled')
    result = await experiment_service.run_experiment(spec)
    analytic, empirical = result.analysis.profile, result.empirical
    defined = empirical.defined
    assert defined.mean() > 0.95
    assert abs(np.mean(empirical.p_false[defined]) - np.mean(analytic.p_false[defined])) < 0.01
    assert abs(np.mean(empirical.p_miss[defined]) - np.mean(analytic.p_miss[defined])) < 0.02


async def test_quantized_forwarding_stays_close(experiment_service, desk_network):
    base = ExperimentSpec(
        network=desk_network, architecture=Architecture.COOP, bbn=2, trials=2000, engine='decoupled'
    )
    ideal = await experiment_service.run_experiment(base)
    quantized = await experiment_service.run_experiment(
        spec_with(base, quantizer=FronthaulQuantization(q_bits=4, zeta=0.97))
    )
    assert quantized.analysis.quantizer.l_max.shape == (100, 2)
    defined = ideal.empirical.defined & quantized.empirical.defined
    gap = np.mean(quantized.empirical.p_equal[defined]) - np.mean(ideal.empirical.p_equal[defined])
    assert abs(gap) < 0.03
    analytic = quantized.analysis.profile
    assert abs(np.mean(quantized.empirical.p_false[defined]) - np.mean(analytic.p_false[defined])) < 0.01
    assert abs(np.mean(quantized.empirical.p_miss[defined]) - np.mean(analytic.p_miss[defined])) < 0.02


async def test_quantized_strong_users_keep_false_alarms_low(experiment_service, desk_network):
    spec = ExperimentSpec(
        network=desk_network,
        architecture=Architecture.COOP,
        bbn=2,
        trials=500,
        engine='decoupled',
        quantizer=FronthaulQuantization(q_bits=4, zeta=0.97),
    )
    result = await experiment_service.run_experiment(spec)
    theta = result.analysis.serving_gains()[:, 0] ** 2 / result.analysis.tau_sq
    strong = theta >= np.quantile(theta, 0.9)
    assert np.all(result.analysis.profile.p_false[strong] < 0.01)
    assert np.mean(result.empirical.p_false[strong]) < 0.02


async def test_cooperation_improves_cell_edge(experiment_service, desk_network):
    edges = []
    for bbn in (1, 2, 3):
        spec = ExperimentSpec(network=desk_network, architecture=Architecture.COOP, bbn=bbn)
        edges.append((await experiment_service.predict(spec)).analysis.profile.cell_edge_95)
    assert edges[1] < edges[0]
    assert edges[2] <= edges[1] * (1 + 1e-9)


async def test_antennas_improve_cell_edge_at_full_scale(experiment_service):
    edges = []
    for antennas in (4, 8, 16, 32):
        spec = ExperimentSpec(network=NetworkConfig.full_scale(antennas=antennas))
        edges.append((await experiment_service.predict(spec)).analysis.profile.cell_edge_95)
    assert all(b < a for a, b in zip(edges, edges[1:]))
    assert edges[-1] * 10 <= edges[0]


def test_cdf_table_names():
    network = NetworkConfig(antennas=1)
    assert cdf_table_name(ExperimentSpec()) == 'fig2_cdf'
    assert cdf_table_name(ExperimentSpec(architecture='coop', bbn=2)) == 'fig4_cdf'
    quantized = ExperimentSpec(architecture='coop', bbn=2, quantizer=FronthaulQuantization(q_bits=3))
    assert cdf_table_name(quantized) == 'fig9_cdf'
    assert cdf_table_name(spec_with(quantized, network=network)) == 'fig8_cdf'


async def test_quantized_run_writes_lmax_table(experiment_service, network, tmp_path):
    spec = ExperimentSpec(
        network=network, architecture='coop', bbn=2, quantizer=FronthaulQuantization(q_bits=3), outputs=('cdf',)
    )
    paths = experiment_service.write(await experiment_service.predict(spec), tmp_path)
    assert sorted(p.name for p in paths) == ['fig9_cdf.csv', 'lmax_table.csv']


async def test_errors_carry_context(experiment_service):
    spec = ExperimentSpec(network=NetworkConfig(num_cells=8))
    with pytest.raises(ExperimentError) as info:
        await experiment_service.predict(spec)
    assert isinstance(info.value.__cause__, ConfigurationError)
    assert info.value.context.startswith('predict')


async def test_serving_outside_detection_scope(experiment_service):
    spec = ExperimentSpec(architecture='coop', bbn=3, detection_tiers=0)
    with pytest.raises(ExperimentError) as info:
        await experiment_service.predict(spec)
    assert isinstance(info.value.__cause__, ConfigurationError)


async def test_sweep_antennas(experiment_service, network, tmp_path):
    rows = await experiment_service.sweep(ExperimentSpec(network=network), 'M', [4, 8])
    assert [r.value for r in rows] == [4.0, 8.0]
    assert all(math.isnan(r.cell_edge_empirical) for r in rows)
    path = experiment_service.write_sweep(rows, 'M', tmp_path)
    assert path.name == 'fig6_antennas.csv'
    assert [r.value for r in TableWriter.read(path, SweepRow)] == [4.0, 8.0]


async def test_sweep_with_simulation(experiment_service, network):
    spec = ExperimentSpec(network=network, trials=2, engine='decoupled')
    rows = await experiment_service.sweep(spec, 'M', [4, 8], simulate=True)
    assert len(rows) == 2


async def test_sweep_sequence_length(experiment_service, desk_network):
    rows = await experiment_service.sweep(ExperimentSpec(network=desk_network), 'L', [20, 40, 80])
    edges = [r.cell_edge_analytic for r in rows]
    assert edges[0] > edges[1] > edges[2]


async def test_sweep_detection_radius(experiment_service, network):
    radii = list(np.linspace(network.cell_radius, network.network_radius, 3))
    rows = await experiment_service.sweep(ExperimentSpec(network=network), 'detection_radius', radii)
    taus = [r.tau_sq_inf for r in rows]
    assert taus[0] > taus[1] > taus[2]
    assert [r.architecture for r in rows] == ['tin', 'partial', 'coop']


async def test_sweep_cooperation(experiment_service, network):
    rows = await experiment_service.sweep(ExperimentSpec(network=network), 'B_bn', [1, 2])
    assert [r.architecture for r in rows] == ['tin', 'coop']


async def test_unknown_sweep_parameter(experiment_service, network):
    with pytest.raises(UnknownParameterError):
        await experiment_service.sweep(ExperimentSpec(network=network), 'K', [1])


async def test_quantize_sweep(experiment_service, network):
    spec = ExperimentSpec(network=network, architecture='coop', bbn=2)
    rows = await experiment_service.quantize_sweep(spec, [2, 4])
    assert [r.value for r in rows] == [math.inf, 2.0, 4.0]
    assert [r.fronthaul_bits for r in rows] == [0, 160, 320]


async def test_amp_trace(experiment_service, network, tmp_path):
    path = await experiment_service.amp_trace(ExperimentSpec(network=network), tmp_path)
    lines = path.read_text().splitlines()
    assert lines[1] == 'iteration,tau_sq,residual_norm'
    assert lines[2].startswith('0,')


async def test_validate(experiment_service, network, tmp_path):
    spec = ExperimentSpec(network=network, trials=8, engine='decoupled')
    rows = await experiment_service.validate(spec)
    checks = {r.check: r for r in rows}
    assert set(checks) == {'se_vs_amp_tau_sq', 'tin_over_rec_tau_sq', 'cdf_sup_gap_tin', 'cdf_sup_gap_coop'}
    assert checks['tin_over_rec_tau_sq'].passed
    assert 0.5 < 1 + checks['se_vs_amp_tau_sq'].value < 2
    assert checks['se_vs_amp_tau_sq'].limit == 0.05
    path = experiment_service.write_validation(rows, tmp_path)
    assert path.name == 'validation.csv'


async def test_single_cell_amp_tracks_state_evolution(experiment_service):
    network = NetworkConfig(num_cells=1, users_per_cell=1000, seq_len=200, antennas=8, user_region='disc')
    measured = []
    for seed in (1, 2, 3):
        result = await experiment_service.run_experiment(ExperimentSpec(network=network, trials=8, seed=seed))
        measured.extend(result.centre_tau_sq)
    predicted = result.analysis.tau_sq
    assert abs(np.mean(measured) - predicted) / predicted <= 0.05


async def test_amp_errors_match_analytic_at_measured_noise(experiment_service, disc_cell):
    result = await experiment_service.run_experiment(ExperimentSpec(network=disc_cell, trials=600))
    analysis, empirical = result.analysis, result.empirical
    gains = analysis.serving_gains()[:, 0]
    # thresholds live on Δ‖x̃‖² with the state-evolution Δ; the rule itself is ‖x̃‖² ≥ level
    level = analysis.thresholds / (1 / analysis.tau_sq - 1 / (gains**2 + analysis.tau_sq))
    expected = np.array(
        [
            np.mean([tuple(pm_pf_massive_analytic(g, tau, 4, l)) for tau in result.centre_tau_sq], axis=0)
            for g, l in zip(gains, level)
        ]
    )
    defined = empirical.defined
    assert defined.mean() > 0.9
    assert abs(np.mean(empirical.p_miss[defined]) - np.mean(expected[defined, 0])) < 0.03
    assert abs(np.mean(empirical.p_false[defined]) - np.mean(expected[defined, 1])) < 0.015
