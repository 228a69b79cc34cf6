import pytest

from lockspring.clutch_model import CapstanGeometry, SolenoidSpec
from lockspring.spring_mechanism import CableSpec, SpringSpec
from lockspring.workloop import Assembly, LockLossModel, Protocol, run_protocol


@pytest.fixture
def prototype_geometry():
    return CapstanGeometry(12.0, 19.0, 20.0, 2.4, 0.4)


@pytest.fixture
def solenoid():
    return SolenoidSpec()


@pytest.fixture
def cable():
    return CableSpec()


@pytest.fixture
def spring():
    return SpringSpec()


@pytest.fixture(scope="session")
def default_trace():
    return run_protocol(Protocol.accumulation(), Assembly(), LockLossModel())


@pytest.fixture(scope="session")
def ideal_trace():
    return run_protocol(Protocol.accumulation(), Assembly(), LockLossModel(0.0, False))
