from pathlib import Path

import pytest

from poolbo.pools import load_pool
from poolbo.synth import SyntheticSpec

FIXTURES = Path(__file__).parent / "fixtures"


def fixture_pool(name):
    return load_pool(FIXTURES / f"{name}.pool", "binary")


def fixture_spec(name):
    return SyntheticSpec.from_json((FIXTURES / f"{name}.spec.json").read_text())


@pytest.fixture(scope="session")
def gp_draw_pool():
    return fixture_pool("gp_draw_n60")


@pytest.fixture(scope="session")
def clusters_pool():
    return fixture_pool("clusters_n300")


@pytest.fixture(scope="session")
def clusters2_pool():
    return fixture_pool("clusters2_n120")


@pytest.fixture(scope="session")
def subspace_pool():
    return fixture_pool("subspace_n200")
