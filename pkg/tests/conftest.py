from pathlib import Path

import numpy as np
import pytest

from spinecho.acceptance import random_couplings, random_realization

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def couplings(rng):
    """Four spins, couplings of order 1 kHz."""
    return random_couplings(4, rng, 1e3)


@pytest.fixture
def realization(rng):
    return random_realization(4, rng, 1e3, offset_hz=250.0)


@pytest.fixture
def golden():
    return GOLDEN
