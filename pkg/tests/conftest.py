import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=50)
settings.load_profile("default")


@pytest.fixture(scope="session")
def production_precode():
    from rateless_recon.precode import default_precode

    return default_precode()


@pytest.fixture(scope="session")
def small_precode():
    """k=990, k'=1000 PEG code; same shape as production, 10x cheaper."""
    from rateless_recon.precode import build_systematic_precode

    return build_systematic_precode(990, 1000, col_weight=3, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
