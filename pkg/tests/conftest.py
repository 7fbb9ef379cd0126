from contextlib import contextmanager

import numpy as np
import pytest

from convlens import (
    ArchitectureDescriptor,
    ConvHyper,
    DenseHyper,
    GroupTag,
    LayerSpec,
    PoolHyper,
    Tensor3,
    make_fixture_model,
    run_forward,
    synthetic_image,
    tiny_vgg,
)
from convlens.engine import CONV, DENSE, FLATTEN, MAX_POOL, RELU

DATA_DIR = __file__.rsplit("/", 1)[0] + "/data"


def small_descriptor(classes=4):
    """A fast 8x8x3 conv/relu/pool/flatten/dense chain for cheap tests."""
    layers = (
        LayerSpec(CONV, "conv_a", ConvHyper(kernel_size=3, stride=1, padding=0, out_channels=3), GroupTag(0, 0)),
        LayerSpec(RELU, "relu_a", None, GroupTag(0, 0)),
        LayerSpec(MAX_POOL, "pool_a", PoolHyper(2, 2), GroupTag(0, 0)),
        LayerSpec(FLATTEN, "flatten", None, GroupTag(1, 1)),
        LayerSpec(DENSE, "output", DenseHyper(out_units=classes), GroupTag(1, 1)),
    )
    labels = tuple(f"class_{i}" for i in range(classes))
    return ArchitectureDescriptor(input_shape=(8, 8, 3), layers=layers, class_labels=labels)


def random_descriptor(rng: np.random.RandomState) -> ArchitectureDescriptor:
    """A random valid linear chain: 1-2 conv blocks, then flatten + dense."""
    h = int(rng.randint(6, 15))
    w = int(rng.randint(6, 15))
    c = int(rng.randint(1, 4))
    shape = (h, w, c)
    layers = []
    unit = 0
    for block in range(int(rng.randint(1, 3))):
        k = int(rng.choice([1, 2, 3]))
        stride = int(rng.choice([1, 2]))
        padding = int(rng.choice([0, 1]))
        out_ch = int(rng.randint(1, 5))
        oh = (shape[0] + 2 * padding - k) // stride + 1
        ow = (shape[1] + 2 * padding - k) // stride + 1
        if oh < 2 or ow < 2:
            continue
        tag = GroupTag(unit, unit // 2)
        layers.append(LayerSpec(CONV, f"conv_{block}", ConvHyper(k, stride, padding, out_ch), tag))
        shape = (oh, ow, out_ch)
        if rng.rand() < 0.8:
            layers.append(LayerSpec(RELU, f"relu_{block}", None, tag))
        if rng.rand() < 0.5 and shape[0] >= 2 and shape[1] >= 2:
            layers.append(LayerSpec(MAX_POOL, f"pool_{block}", PoolHyper(2, 2), tag))
            shape = ((shape[0] - 2) // 2 + 1, (shape[1] - 2) // 2 + 1, shape[2])
        unit += 1
    tag = GroupTag(unit, unit // 2)
    if not layers:
        layers.append(LayerSpec(CONV, "conv_0", ConvHyper(1, 1, 0, 2), GroupTag(0, 0)))
        shape = (h, w, 2)
    layers.append(LayerSpec(FLATTEN, "flatten", None, tag))
    classes = int(rng.randint(2, 6))
    layers.append(LayerSpec(DENSE, "output", DenseHyper(classes), tag))
    input_shape = (h, w, c)
    return ArchitectureDescriptor(
        input_shape=input_shape,
        layers=tuple(layers),
        class_labels=tuple(f"class_{i}" for i in range(classes)),
    )


def random_input(rng: np.random.RandomState, shape) -> Tensor3:
    return Tensor3(rng.rand(*shape).astype(np.float32))


@pytest.fixture(scope="session")
def tiny_vgg_descriptor():
    return tiny_vgg()


@pytest.fixture(scope="session")
def fixture_bundle(tiny_vgg_descriptor):
    return make_fixture_model(42, tiny_vgg_descriptor, name="tiny_vgg_fixture")


@pytest.fixture(scope="session")
def golden_input():
    return synthetic_image((64, 64, 3), seed=7)


@pytest.fixture(scope="session")
def fixture_session(fixture_bundle, golden_input):
    return run_forward(fixture_bundle, golden_input.pixels)


@pytest.fixture(scope="session")
def small_bundle():
    return make_fixture_model(5, small_descriptor(), name="small_fixture")


@pytest.fixture(scope="session")
def small_session(small_bundle):
    rng = np.random.RandomState(11)
    return run_forward(small_bundle, random_input(rng, small_bundle.descriptor.input_shape))


ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


@contextmanager
def criterion(name: str):
    """Record one acceptance criterion's outcome for the end-of-run report."""
    try:
        yield
    except BaseException:
        ACCEPTANCE_RESULTS.append((name, "FAIL"))
        raise
    ACCEPTANCE_RESULTS.append((name, "PASS"))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{outcome}  {name}")
