import pytest

from mobius_gg.braid_core import default_table
from mobius_gg.isotopy_engine import BaseGeometry


@pytest.fixture(scope="session")
def base():
    return BaseGeometry()


@pytest.fixture(scope="session")
def table(base):
    return default_table(base)
