import pytest
from pydantic import ValidationError

from experiments.models import ExperimentSpec
from geometry.models import NetworkConfig
from quantize.models import FronthaulQuantization
from state_evolution.models import Architecture


def test_defaults():
    spec = ExperimentSpec()
    assert spec.architecture == Architecture.TIN
    assert (spec.bbn, spec.trials, spec.seed) == (1, 200, 2024)
    assert spec.network.num_cells == 7


@pytest.mark.parametrize(
    'fields',
    [
        {'bbn': 2},
        {'architecture': Architecture.COOP, 'bbn': 8},
        {'quantizer': FronthaulQuantization(q_bits=3)},
        {'architecture': Architecture.PARTIAL},
        {'outputs': ('profile', 'histogram')},
        {'trials': 0},
        {'architecture': 'massive'},
    ],
)
def test_rejects(fields):
    with pytest.raises(ValidationError):
        ExperimentSpec(**fields)


def test_cooperative_spec():
    spec = ExperimentSpec(
        network=NetworkConfig(antennas=4),
        architecture='coop',
        bbn=3,
        quantizer=FronthaulQuantization(q_bits=4, zeta=0.97),
    )
    assert spec.architecture == Architecture.COOP
    assert spec.quantizer.q_bits == 4
