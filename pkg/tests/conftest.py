import numpy as np
import pytest

from thermopinn.types import DomainSpec, FieldJet2, FlowParameters, Jet, MLPArchitecture
from thermopinn.sampling import hierarchical_datasets


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run desk-scale training tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def rect():
    return DomainSpec()


@pytest.fixture
def flow():
    return FlowParameters()


@pytest.fixture
def small_arch():
    return MLPArchitecture.parse("2-8-8-4")


@pytest.fixture(scope="session")
def ladder():
    return hierarchical_datasets(8, DomainSpec(), 0)


def make_jet(**fields) -> FieldJet2:
    """A jet that is zero everywhere except the given entries, e.g. make_jet(p={"x": 1.0})."""
    return FieldJet2(*(Jet(**{k: 0.0 for k in Jet._fields} | fields.get(name, {})) for name in ("u", "v", "p", "theta")))


def random_points(n: int, seed: int, low: float = -1.0, high: float = 1.0) -> np.ndarray:
    return np.random.default_rng(seed).uniform(low, high, size=(n, 2))


TINY_OVERRIDES = [
    "architecture=2-8-4",
    "levels=2",
    "level=1",
    "test_grid=6",
    "train.max_epochs=5",
    "train.threshold=1e10",
    "study.levels=[0, 1]",
    "study.thresholds=[1e10, 1e9]",
    "study.ablation_threshold=1e10",
    "study.ablation_levels=[0]",
    "transfer.max_epochs=5",
]


@pytest.fixture
def tiny_config(tmp_path):
    """Desk preset shrunk so every run converges (or stops) within a few epochs."""
    from thermopinn.config import resolve_config

    return resolve_config(overrides=TINY_OVERRIDES, out=str(tmp_path / "out"))
