import math

import numpy as np
import pytest

from timebin_qudits.chain import HardwareParams, build_measurement_chain
from timebin_qudits.hilbert import TimeGrid


@pytest.fixture
def grid4():
    return TimeGrid(2.25, 4, (2600, 5600))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def reference_chains():
    """The four reference apparatuses: d in {4, 8}, both bases, ideal hardware."""
    return {(d, b): build_measurement_chain(d, b) for d in (4, 8) for b in (0, 1)}


@pytest.fixture
def degraded_hw():
    return HardwareParams(delta_phi=0.9 * math.pi)
