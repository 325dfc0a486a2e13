import os

import numpy as np
import pytest

# calibration cache shared across test sessions (and with dev runs)
os.environ.setdefault(
    "HYPERLAP_CACHE",
    os.path.join(os.path.expanduser("~"), ".cache", "hyperlap", "plancherel.json"))


@pytest.fixture(scope="session")
def constants():
    from hyperlap.transforms import get_constants

    c2, c3 = get_constants()
    return {"c2": c2, "c3": c3}


@pytest.fixture()
def rng():
    return np.random.default_rng(20250809)
