from pathlib import Path

import numpy as np
import pytest

from magsteer.assemblies import make_builtin_assembly

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def twod():
    return make_builtin_assembly("twod")


@pytest.fixture(scope="session")
def twod_raw():
    return make_builtin_assembly("twod", calibrated=False)


@pytest.fixture(scope="session")
def helmholtz():
    return make_builtin_assembly("helmholtz")


@pytest.fixture(scope="session")
def helmholtz_raw():
    return make_builtin_assembly("helmholtz", calibrated=False)


@pytest.fixture(scope="session")
def tweezer():
    return make_builtin_assembly("tweezer")


@pytest.fixture(scope="session")
def rotation_fixture():
    rows = np.loadtxt(DATA_DIR / "rotation_fixture.csv", delimiter=",", skiprows=1)
    return rows[:, 0], rows[:, 1:]
