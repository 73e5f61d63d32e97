import pytest

from experiments.models import ExperimentSpec
from geometry.models import NetworkConfig


@pytest.fixture
def tiny_spec() -> ExperimentSpec:
    return ExperimentSpec(network=NetworkConfig(num_cells=1, users_per_cell=4, seq_len=8), trials=1)


@pytest.fixture
def desk_network() -> NetworkConfig:
    return NetworkConfig(users_per_cell=100, antennas=4)


@pytest.fixture
def disc_cell() -> NetworkConfig:
    return NetworkConfig(num_cells=1, users_per_cell=100, seq_len=20, antennas=4, user_region='disc')
