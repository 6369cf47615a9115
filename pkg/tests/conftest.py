from pathlib import Path

import pytest

from zernturb.oracle import read_fixture_table

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_table():
    def load(name):
        return read_fixture_table(FIXTURES / name)

    return load
