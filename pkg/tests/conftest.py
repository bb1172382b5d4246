from __future__ import annotations

import pytest

from fridgepref.benchgen import generate_dataset


@pytest.fixture(scope="session")
def dataset():
    return generate_dataset(0)
