import numpy as np
import pytest

from transfercluster import kernels


@pytest.fixture(params=kernels.available_backends())
def each_backend(request):
    """Run a test once per available kernel backend, restoring the default."""
    previous = kernels.active_backend()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)


@pytest.fixture
def two_blobs():
    """Two tight, far-apart Gaussian blobs with ground-truth labels."""

    def make(n_per=5, dim=2, distance=100.0, noise=0.01, seed=0):
        rng = np.random.default_rng(seed)
        a = rng.normal(0.0, noise, size=(n_per, dim))
        b = rng.normal(0.0, noise, size=(n_per, dim))
        b[:, 0] += distance
        data = np.vstack([a, b])
        labels = np.array([0] * n_per + [1] * n_per)
        return data, labels

    return make
