import numpy as np
import pytest

from src.config import CASE_STUDY_JSON, CASE_STUDY_PRIO_JSON
from src.model_io import parse_model


@pytest.fixture(scope="session")
def agc():
    return parse_model(CASE_STUDY_JSON)


@pytest.fixture(scope="session")
def agc_prio():
    return parse_model(CASE_STUDY_PRIO_JSON)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
