"""View-backing data derived from a finished inference session.

Everything here is recomputed on demand from the retained activations; the
forward pass itself stores nothing beyond the per-layer outputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import CONV, DENSE, FLATTEN, MAX_POOL, RELU, InferenceSession
from .errors import BoundsError, QueryError
from .tensor import Tensor3, Window, offset_coords

SCOPES = ("layer", "unit", "module", "global")


@dataclass(frozen=True)
class ConvDecomposition:
    """One conv neuron split into per-input-channel intermediate maps.

    Each intermediate is the convolution of a single input channel with its
    kernel, no bias. Summing the intermediates and adding the bias
    reconstructs the stored activation channel up to float32 reassociation
    error (the forward pass interleaves channels; this path does not).
    """

    layer_name: str
    out_channel: int
    intermediates: tuple[Tensor3, ...]
    kernels: np.ndarray  # (in_channels, k, k) float32
    bias: float
    reconstructed: Tensor3


@dataclass(frozen=True)
class FlattenEdge:
    source: tuple[int, int, int]
    flat_index: int
    source_value: float
    weight: float
    contribution: float


@dataclass(frozen=True)
class FlattenWiring:
    """Every flatten element's contribution to one output class's logit."""

    class_index: int
    edges: tuple[FlattenEdge, ...]
    bias: float


@dataclass(frozen=True)
class WindowTrace:
    """A single sliding-window application: input region, operands, result."""

    kind: str
    input_window: Window
    kernel: np.ndarray | None
    products: np.ndarray | None
    result: float


@dataclass(frozen=True)
class ColorScale:
    """Symmetric diverging value-to-position mapping for one scope group.

    position(v) = v / max_abs clamped to [-1, 1]; -1 renders saturated red,
    0 white, +1 saturated blue. max_abs of 0 degenerates to all-white.
    """

    scope: str
    scope_key: str
    max_abs: float

    def position(self, value: float) -> float:
        if self.max_abs == 0.0:
            return 0.0
        return min(1.0, max(-1.0, value / self.max_abs))


@dataclass(frozen=True)
class LayerTopology:
    """How one layer's neurons connect to the previous layer's."""

    layer_name: str
    connectivity: str  # "full", "one_to_one", or "flatten"
    in_neurons: int
    out_neurons: int
    edge_count: int


def _conv_layer(session: InferenceSession, layer_name: str):
    descriptor = session.model.descriptor
    index = descriptor.layer_index(layer_name)
    spec = descriptor.layers[index]
    if spec.kind != CONV:
        raise QueryError(f"layer {layer_name!r} is {spec.kind}, not Conv")
    return index, spec


def _single_channel_conv(plane: np.ndarray, kernel: np.ndarray, stride: int, oh: int, ow: int) -> np.ndarray:
    """Convolve one (already padded) plane with one kernel, taps in (row, col) order."""
    k = kernel.shape[0]
    acc = np.zeros((oh, ow), dtype=np.float32)
    for r in range(k):
        rows = slice(r, r + (oh - 1) * stride + 1, stride)
        for q in range(k):
            acc += plane[rows, q:q + (ow - 1) * stride + 1:stride] * kernel[r, q]
    return acc


def decompose_conv_neuron(session: InferenceSession, layer_name: str, out_channel: int) -> ConvDecomposition:
    """Split one conv neuron's output into per-input-channel intermediates plus bias."""
    index, spec = _conv_layer(session, layer_name)
    hyper = spec.hyper
    if not 0 <= out_channel < hyper.out_channels:
        raise BoundsError(f"out_channel {out_channel} out of range for {hyper.out_channels} channels")
    source = session.layer_input(index)
    activation = session.activations[index]
    oh, ow = activation.height, activation.width
    entry = session.model.weights.conv(layer_name)
    padded = source.array
    if hyper.padding > 0:
        padded = np.pad(padded, ((hyper.padding, hyper.padding), (hyper.padding, hyper.padding), (0, 0)))
    kernels = entry.kernels[out_channel]
    intermediates = []
    total = np.zeros((oh, ow), dtype=np.float32)
    for i in range(source.channels):
        plane = _single_channel_conv(padded[:, :, i], kernels[i], hyper.stride, oh, ow)
        total += plane
        intermediates.append(Tensor3(plane.reshape(oh, ow, 1), copy=False))
    bias = float(entry.biases[out_channel])
    total += entry.biases[out_channel]
    return ConvDecomposition(
        layer_name=layer_name,
        out_channel=out_channel,
        intermediates=tuple(intermediates),
        kernels=kernels,
        bias=bias,
        reconstructed=Tensor3(total.reshape(oh, ow, 1), copy=False),
    )


def flatten_wiring(session: InferenceSession, class_index: int) -> FlattenWiring:
    """One edge per flatten element into the output layer, for one class."""
    descriptor = session.model.descriptor
    labels = descriptor.class_labels
    if not 0 <= class_index < len(labels):
        raise BoundsError(f"class_index {class_index} out of range for {len(labels)} classes")
    flatten_index = next(i for i, spec in enumerate(descriptor.layers) if spec.kind == FLATTEN)
    dense_spec = descriptor.layers[-1]
    if flatten_index != len(descriptor.layers) - 2:
        raise QueryError("flatten wiring requires the output layer to directly follow flatten")
    source = session.layer_input(flatten_index)
    flat = session.activations[flatten_index]
    entry = session.model.weights.dense(dense_spec.name)
    weights_row = entry.matrix[class_index]
    values = flat.data
    contributions = weights_row * values  # float32, same products the dense layer used
    shape = source.shape
    edges = tuple(
        FlattenEdge(
            source=offset_coords(shape, f),
            flat_index=f,
            source_value=float(values[f]),
            weight=float(weights_row[f]),
            contribution=float(contributions[f]),
        )
        for f in range(values.shape[0])
    )
    return FlattenWiring(class_index=class_index, edges=edges, bias=float(entry.biases[class_index]))


def trace_window(
    session: InferenceSession,
    layer_name: str,
    out_channel: int,
    row: int,
    col: int,
    in_channel: int | None = None,
) -> WindowTrace:
    """Reproduce the single window computation behind one output element.

    Conv traces follow the per-input-channel intermediate (in_channel is
    required); when the layer is padded the window is taken from the
    zero-padded plane, with origin coordinates in padded space. ReLU and
    MaxPool traces match the stored activation exactly.
    """
    descriptor = session.model.descriptor
    index = descriptor.layer_index(layer_name)
    spec = descriptor.layers[index]
    activation = session.activations[index]
    if not 0 <= out_channel < activation.channels:
        raise BoundsError(f"out_channel {out_channel} out of range for {activation.channels} channels")
    if not (0 <= row < activation.height and 0 <= col < activation.width):
        raise BoundsError(f"output position ({row}, {col}) outside plane {activation.height}x{activation.width}")
    source = session.layer_input(index)

    if spec.kind == RELU:
        x = source.array[row, col, out_channel]
        values = np.array([[x]], dtype=np.float32)
        values.setflags(write=False)
        window = Window(origin_row=row, origin_col=col, size=1, values=values)
        return WindowTrace(kind=RELU, input_window=window, kernel=None, products=None,
                           result=float(np.maximum(x, np.float32(0.0))))

    if spec.kind == MAX_POOL:
        hyper = spec.hyper
        r0, c0 = row * hyper.stride, col * hyper.stride
        values = source.array[r0:r0 + hyper.pool_size, c0:c0 + hyper.pool_size, out_channel].copy()
        values.setflags(write=False)
        window = Window(origin_row=r0, origin_col=c0, size=hyper.pool_size, values=values)
        result = values[0, 0]
        for r in range(hyper.pool_size):
            for q in range(hyper.pool_size):
                result = np.maximum(result, values[r, q])
        return WindowTrace(kind=MAX_POOL, input_window=window, kernel=None, products=None, result=float(result))

    if spec.kind == CONV:
        if in_channel is None:
            raise QueryError("conv traces need in_channel: they follow one input channel's intermediate")
        if not 0 <= in_channel < source.channels:
            raise BoundsError(f"in_channel {in_channel} out of range for {source.channels} channels")
        hyper = spec.hyper
        k, s, p = hyper.kernel_size, hyper.stride, hyper.padding
        padded = source.array[:, :, in_channel]
        if p > 0:
            padded = np.pad(padded, p)
        r0, c0 = row * s, col * s
        values = padded[r0:r0 + k, c0:c0 + k].copy()
        values.setflags(write=False)
        window = Window(origin_row=r0, origin_col=c0, size=k, values=values)
        kernel = session.model.weights.conv(layer_name).kernels[out_channel, in_channel]
        products = values * kernel
        products.setflags(write=False)
        # accumulate in row-major order: bit-identical to the intermediate map
        result = float(np.add.accumulate(products.reshape(-1))[-1])
        return WindowTrace(kind=CONV, input_window=window, kernel=kernel, products=products, result=result)

    raise QueryError(f"layer {layer_name!r} is {spec.kind}; traces cover Conv, ReLU, and MaxPool layers")


def _max_abs(tensor: Tensor3) -> float:
    return float(np.abs(tensor.array).max())


def color_scales(session: InferenceSession, scope: str) -> list[ColorScale]:
    """One ColorScale per group under the requested scope.

    The input image never participates: it is displayed as RGB, not as an
    activation heatmap.
    """
    if scope not in SCOPES:
        raise QueryError(f"unknown scope {scope!r}; valid scopes: {', '.join(SCOPES)}")
    descriptor = session.model.descriptor
    if scope == "layer":
        return [
            ColorScale(scope="layer", scope_key=spec.name, max_abs=_max_abs(act))
            for spec, act in zip(descriptor.layers, session.activations)
        ]
    if scope == "global":
        max_abs = max(_max_abs(act) for act in session.activations)
        return [ColorScale(scope="global", scope_key="global", max_abs=max_abs)]
    groups: dict[int, float] = {}
    for spec, act in zip(descriptor.layers, session.activations):
        key = spec.group.unit if scope == "unit" else spec.group.module
        groups[key] = max(groups.get(key, 0.0), _max_abs(act))
    return [
        ColorScale(scope=scope, scope_key=f"{scope}_{key}", max_abs=groups[key])
        for key in sorted(groups)
    ]


def layer_scale_map(session: InferenceSession, scope: str) -> dict[str, ColorScale]:
    """The active ColorScale for each layer under the requested scope."""
    scales = {scale.scope_key: scale for scale in color_scales(session, scope)}
    descriptor = session.model.descriptor
    out = {}
    for spec in descriptor.layers:
        if scope == "layer":
            key = spec.name
        elif scope == "unit":
            key = f"unit_{spec.group.unit}"
        elif scope == "module":
            key = f"module_{spec.group.module}"
        else:
            key = "global"
        out[spec.name] = scales[key]
    return out


def edge_topology(model) -> tuple[LayerTopology, ...]:
    """Neuron-level connectivity of each layer to its predecessor.

    Conv and Dense neurons connect to every neuron of the previous layer;
    ReLU and MaxPool connect one-to-one by channel; Flatten maps each source
    element to one flat neuron. A Dense layer directly behind Flatten counts
    the pre-flatten layer's channels as its inputs, matching what the
    overview displays.
    """
    descriptor = model.descriptor
    from .engine import propagate_shapes

    shapes = [descriptor.input_shape] + propagate_shapes(descriptor)
    entries = []
    for i, spec in enumerate(descriptor.layers):
        in_shape, out_shape = shapes[i], shapes[i + 1]
        if spec.kind == CONV:
            entries.append(LayerTopology(spec.name, "full", in_shape[2], out_shape[2], in_shape[2] * out_shape[2]))
        elif spec.kind in (RELU, MAX_POOL):
            entries.append(LayerTopology(spec.name, "one_to_one", in_shape[2], out_shape[2], out_shape[2]))
        elif spec.kind == FLATTEN:
            entries.append(LayerTopology(spec.name, "flatten", in_shape[2], out_shape[2], out_shape[2]))
        else:  # Dense
            if i > 0 and descriptor.layers[i - 1].kind == FLATTEN:
                in_neurons = shapes[i - 1][2]  # channels of the layer the flatten unrolled
            else:
                in_neurons = in_shape[2]
            entries.append(LayerTopology(spec.name, "full", in_neurons, out_shape[2], in_neurons * out_shape[2]))
    return tuple(entries)
