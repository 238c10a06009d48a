import numpy as np
import pytest

from deltacnn import from_array, init_weights, reference_architecture
from deltacnn.dense import ConvGeometry
from deltacnn.model import (
    ConvLayer,
    FcLayer,
    FlattenLayer,
    NetworkSpec,
    PoolLayer,
    ReluLayer,
)


def bits_equal(a: np.ndarray, b: np.ndarray) -> bool:
    """Bitwise equality, the currency of dense/delta agreement."""
    return a.shape == b.shape and a.tobytes() == b.tobytes()


def random_frames(rng, n, shape):
    return [from_array(rng.uniform(0.0, 1.0, shape)) for _ in range(n)]


def small_net(seed: int = 0, in_shape=(1, 8, 8)) -> NetworkSpec:
    """A two-stage net small enough for brute-force cross-checks."""
    c, h, w = in_shape
    net = NetworkSpec(
        input_shape=in_shape,
        layers=[
            ConvLayer("conv1", ConvGeometry(c, 3, kernel=3, stride=1, padding=1)),
            ReluLayer("relu1"),
            PoolLayer("pool1", kernel=2, stride=2),
            FlattenLayer("flatten"),
            FcLayer("fc1", in_size=3 * (h // 2) * (w // 2), out_size=5),
        ],
    )
    net.validate()
    init_weights(net, seed)
    return net


@pytest.fixture(scope="session")
def ref_net() -> NetworkSpec:
    net = reference_architecture()
    init_weights(net, seed=1234)
    return net
