import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ecmid.optimize import FitProblem  # noqa: E402
from ecmid.synthetic import REFERENCE_OCV, synthetic_segment  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


@pytest.fixture(scope="session")
def synthetic_problem():
    """300 s of 1 A discharge from the reference parameters, fixed OCV."""
    return FitProblem.build(synthetic_segment(), ocv=REFERENCE_OCV)
