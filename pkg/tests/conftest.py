import pytest
import pytest_asyncio
from dishka import make_async_container

from core.providers import CoreProvider
from core.settings import Settings
from core.tables import TableWriter
from experiments.providers import ExperimentProvider
from experiments.services import ExperimentService
from geometry.models import NetworkConfig


@pytest.fixture
def settings(tmp_path) -> Settings:
    return Settings(OUTPUT_DIR=str(tmp_path / 'out'), WORKERS=2)


@pytest.fixture
async def container(settings):
    container = make_async_container(CoreProvider(settings), ExperimentProvider())
    yield container
    await container.close()


@pytest_asyncio.fixture
async def table_writer(container) -> TableWriter:
    return await container.get(TableWriter)


@pytest_asyncio.fixture
async def experiment_service(container) -> ExperimentService:
    return await container.get(ExperimentService)


@pytest.fixture
def network() -> NetworkConfig:
    # desk-scale geometry with a small population
    return NetworkConfig(num_cells=7, users_per_cell=40, seq_len=20, antennas=4)
