import numpy as np
import pytest

from diqkd import _backend


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(params=sorted(_backend.available_backends()))
def kernels(request):
    return _backend.available_backends()[request.param]
