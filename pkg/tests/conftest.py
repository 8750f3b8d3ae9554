import numpy as np
import pytest


def central_difference(func, tensors, eps=1e-5):
    """Numerical gradient of scalar func() w.r.t. each Tensor's data."""
    grads = []
    for t in tensors:
        g = np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        gflat = g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            hi = func()
            flat[i] = orig - eps
            lo = func()
            flat[i] = orig
            gflat[i] = (hi - lo) / (2 * eps)
        grads.append(g)
    return grads


def rel_err(a, b):
    denom = max(np.abs(a).max(), np.abs(b).max(), 1e-8)
    return np.abs(a - b).max() / denom


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
