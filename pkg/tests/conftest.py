import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from expresso import kernels


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile every numba kernel before any timing-sensitive assertion."""
    kernels.warm_up()
    return kernels.BACKEND


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
