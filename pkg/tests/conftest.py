import os
import pytest

from moduli_py.moduli import ModuliClient
from moduli_py.series import IteratedLaurentSeries, VariableOrder


def pytest_collection_modifyitems(config, items):
    if os.environ.get("MODULI_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="set MODULI_SLOW=1 to run rank 3 computations")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


@pytest.fixture(scope="function")
def moduli():
    return ModuliClient(threads=2)


@pytest.fixture(scope="session")
def ring():
    """The constant 1 over the rank 2 order, uncapped."""
    order = VariableOrder.for_rank(2)
    return IteratedLaurentSeries(order, {(0,) * order.size: 1})


@pytest.fixture(scope="session")
def ring3():
    """The constant 1 over the rank 3 order with δ_3 nilpotent of order 2."""
    order = VariableOrder.for_rank(3, {3: 2})
    return IteratedLaurentSeries(order, {(0,) * order.size: 1})
