import os
from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def fixtures():
    default = Path(__file__).resolve().parent.parent / "fixtures"
    return Path(os.environ.get("NEOFACE_FIXTURE_DIR", default))


@pytest.fixture(scope="session")
def metric(fixtures):
    return fixtures / "metric"
