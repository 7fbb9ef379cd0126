"""convlens: an introspectable linear-CNN inference engine.

Every forward pass retains all per-layer activations so they can be dissected
afterwards: per-input-channel convolution decompositions, flatten-to-output
wiring, per-pixel sliding-window traces, and diverging-colormap scale groups.
"""

from .engine import (
    CONV,
    DENSE,
    FLATTEN,
    MAX_POOL,
    RELU,
    ArchitectureDescriptor,
    ConvHyper,
    ConvWeights,
    DenseHyper,
    DenseWeights,
    GroupTag,
    InferenceSession,
    LayerSpec,
    PoolHyper,
    WeightStore,
    conv_forward,
    dense_forward,
    flatten_forward,
    maxpool_forward,
    output_shape,
    propagate_shapes,
    relu_forward,
    run_forward,
    softmax,
)
from .errors import (
    BoundsError,
    ConvlensError,
    ImageError,
    ModelError,
    QueryError,
    ShapeError,
    ValidationError,
)
from .introspect import (
    ColorScale,
    ConvDecomposition,
    FlattenWiring,
    LayerTopology,
    WindowTrace,
    color_scales,
    decompose_conv_neuron,
    edge_topology,
    flatten_wiring,
    layer_scale_map,
    trace_window,
)
from .model_io import (
    InputImage,
    ModelBundle,
    ingest_image,
    load_model,
    make_fixture_model,
    make_zero_model,
    parameter_count,
    save_model,
    synthetic_image,
    tiny_vgg,
)
from .tensor import Tensor3, Window, extract_window, flat_offset, offset_coords, plane_minmax, tensor_new

__version__ = "0.1.0"


def __getattr__(name):
    # deferred: pulls in scikit-learn, which the CLI paths never need
    if name == "CNNClassifier":
        from .estimator import CNNClassifier

        return CNNClassifier
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
