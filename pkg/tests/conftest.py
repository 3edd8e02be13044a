import numpy as np
import pytest

from plm import Batch, TwoLayerNet


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def net_from(hidden, output):
    return TwoLayerNet(np.array(hidden, dtype=float), np.array(output, dtype=float))


def random_batch(rng, n, m, scale=1.0):
    X = rng.uniform(-scale, scale, size=(n, m))
    y = rng.uniform(-scale, scale, size=n)
    return Batch.from_arrays(X, y)


def pre_activations(net, X):
    return X @ net.hidden[:, 1:].T + net.hidden[:, 0]
