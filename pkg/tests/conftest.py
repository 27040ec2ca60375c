import os
import time

import numpy as np
import pytest

MNIST_DIR = os.environ.get("MNIST_DIR", "/root/data/mnist")


def mnist_available():
    return os.path.exists(os.path.join(MNIST_DIR, "train-images-idx3-ubyte")) or os.path.exists(
        os.path.join(MNIST_DIR, "train-images-idx3-ubyte.gz"))


needs_mnist = pytest.mark.skipif(not mnist_available(), reason=f"MNIST not found in {MNIST_DIR}")


@pytest.fixture(scope="session")
def mnist():
    if not mnist_available():
        pytest.skip(f"MNIST not found in {MNIST_DIR}; run scripts/fetch_mnist.sh")
    from ternary_rram.datasets import load_mnist

    return load_mnist(MNIST_DIR, "train"), load_mnist(MNIST_DIR, "test")


_trained = {}
TRAIN_SECONDS = {}


def trained_mlp(mnist, kind, seed):
    """784-256-256-10 MLP, 10 epochs, cached for the whole session."""
    key = (kind, seed)
    if key not in _trained:
        from ternary_rram.qnn import Hyper, mlp, train
        from ternary_rram.qnn.train import evaluate

        t0 = time.perf_counter()
        net = mlp([784, 256, 256, 10], kind)
        state, hist = train(net, mnist[0], Hyper(epochs=10, batch_size=128, lr=0.01), seed=seed)
        TRAIN_SECONDS[key] = time.perf_counter() - t0
        _trained[key] = (net, state, evaluate(net, state, mnist[1]))
    return _trained[key]


@pytest.fixture(scope="session")
def tnn(mnist):
    return trained_mlp(mnist, "ternary", 0)


@pytest.fixture(scope="session")
def bnn(mnist):
    return trained_mlp(mnist, "binary", 0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line[1])
