import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dhif.scenarios import paper_scenario  # noqa: E402
from dhif.sim import run_monte_carlo  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def paper():
    return paper_scenario()


@pytest.fixture(scope="session")
def paper_mc(paper):
    """The full 500-trial, 70-step run shared by the scenario-scale tests."""
    return run_monte_carlo(paper)
