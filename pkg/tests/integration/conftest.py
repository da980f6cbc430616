import pytest

from rhlab import validate
from rhlab.transform import assemble


@pytest.fixture(scope="session")
def large_params():
    return validate({"alpha": 1.5, "delta": 0.05, "M": 2**14})


@pytest.fixture(scope="session")
def large_assembly(large_params):
    return assemble(large_params)


@pytest.fixture(scope="session")
def commutator_params():
    return validate({"alpha": 1.5, "delta": 0.08, "M": 2**14})


@pytest.fixture(scope="session")
def neumann_params():
    return validate({"alpha": 1.5, "delta": 0.05, "M": 2**12})
