import numpy as np
import pytest

from cubistmerge import backend


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(params=["numpy", "numba"])
def each_backend(request):
    previous = backend.active_backend()
    backend.use_backend(request.param)
    yield request.param
    backend.use_backend(previous)
