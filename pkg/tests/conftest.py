import numpy as np
import pytest

from lppsh.rng import RngStream


@pytest.fixture
def stream():
    return RngStream(12345, 0)


def streams(n, seed=2024):
    return [RngStream(seed, k) for k in range(n)]
