import pytest

from hybridwind import physics as P
from hybridwind import transduction as T


@pytest.fixture
def bi():
    return P.lookup("Bi209")


@pytest.fixture
def halo():
    return P.HaloModel()


@pytest.fixture
def reference_stack():
    return T.SensorStack.default("Bi209", n_spins=1e6, entanglement="ideal", q_factor=1e5)
