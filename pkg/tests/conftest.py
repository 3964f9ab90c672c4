import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from dmtu.harness import case_study
from dmtu.model import DEFAULT_PARAMS

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], derandomize=True
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def params():
    return DEFAULT_PARAMS


@pytest.fixture
def case_topo():
    return case_study().topology


@pytest.fixture
def scenarios_dir():
    return SCENARIOS
