"""Forward pass for linear CNNs with every layer's output retained.

Floating-point summation orders are part of the output contract: convolution
accumulates bias first, then taps ordered (input channel, kernel row, kernel
column); the dense layer accumulates bias first, then products in ascending
flat index. Fixing the order makes runs bit-reproducible and lets golden files
and naive-loop oracles demand exact equality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from time import perf_counter
from typing import TYPE_CHECKING

import numpy as np

from .errors import ModelError, QueryError, ShapeError
from .tensor import Tensor3

if TYPE_CHECKING:
    from .model_io import ModelBundle

CONV = "Conv"
RELU = "ReLU"
MAX_POOL = "MaxPool"
FLATTEN = "Flatten"
DENSE = "Dense"

LAYER_KINDS = frozenset({CONV, RELU, MAX_POOL, FLATTEN, DENSE})


@dataclass(frozen=True)
class ConvHyper:
    kernel_size: int
    stride: int = 1
    padding: int = 0
    out_channels: int = 1

    def __post_init__(self):
        if self.kernel_size < 1:
            raise ShapeError(f"kernel_size must be >= 1, got {self.kernel_size}")
        if self.stride < 1:
            raise ShapeError(f"stride must be >= 1, got {self.stride}")
        if self.padding < 0:
            raise ShapeError(f"padding must be >= 0, got {self.padding}")
        if self.out_channels < 1:
            raise ShapeError(f"out_channels must be >= 1, got {self.out_channels}")


@dataclass(frozen=True)
class PoolHyper:
    pool_size: int = 2
    stride: int = 2

    def __post_init__(self):
        if self.pool_size < 1 or self.stride < 1:
            raise ShapeError(f"pool_size and stride must be >= 1, got ({self.pool_size}, {self.stride})")


@dataclass(frozen=True)
class DenseHyper:
    out_units: int

    def __post_init__(self):
        if self.out_units < 1:
            raise ShapeError(f"out_units must be >= 1, got {self.out_units}")


@dataclass(frozen=True)
class GroupTag:
    """Display grouping of a layer: unit index and module index."""

    unit: int = 0
    module: int = 0


_HYPER_FOR_KIND = {CONV: ConvHyper, MAX_POOL: PoolHyper, DENSE: DenseHyper, RELU: type(None), FLATTEN: type(None)}


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    name: str
    hyper: ConvHyper | PoolHyper | DenseHyper | None = None
    group: GroupTag = field(default_factory=GroupTag)

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ShapeError(f"unknown layer kind {self.kind!r}, expected one of {sorted(LAYER_KINDS)}")
        if not isinstance(self.hyper, _HYPER_FOR_KIND[self.kind]):
            raise ShapeError(f"layer {self.name!r}: {self.kind} layer cannot carry {type(self.hyper).__name__} hyperparameters")


def output_shape(in_shape: tuple[int, int, int], spec: LayerSpec) -> tuple[int, int, int]:
    """Shape produced by applying one layer to an input of the given shape."""
    h, w, c = in_shape
    if spec.kind == CONV:
        hyper = spec.hyper
        oh = (h + 2 * hyper.padding - hyper.kernel_size) // hyper.stride + 1
        ow = (w + 2 * hyper.padding - hyper.kernel_size) // hyper.stride + 1
        if oh < 1 or ow < 1:
            raise ShapeError(f"layer {spec.name!r}: conv over {h}x{w} input yields non-positive output {oh}x{ow}")
        return (oh, ow, hyper.out_channels)
    if spec.kind == RELU:
        return in_shape
    if spec.kind == MAX_POOL:
        hyper = spec.hyper
        if hyper.pool_size > h or hyper.pool_size > w:
            raise ShapeError(f"layer {spec.name!r}: pool size {hyper.pool_size} exceeds plane {h}x{w}")
        oh = (h - hyper.pool_size) // hyper.stride + 1
        ow = (w - hyper.pool_size) // hyper.stride + 1
        return (oh, ow, c)
    if spec.kind == FLATTEN:
        return (1, 1, h * w * c)
    if spec.kind == DENSE:
        if h != 1 or w != 1:
            raise ShapeError(f"layer {spec.name!r}: dense requires a flattened (1, 1, n) input, got {in_shape}")
        return (1, 1, spec.hyper.out_units)
    raise ShapeError(f"unknown layer kind {spec.kind!r}")


@dataclass(frozen=True)
class ArchitectureDescriptor:
    """Ordered layer chain plus class labels; defines one linear CNN."""

    input_shape: tuple[int, int, int]
    layers: tuple[LayerSpec, ...]
    class_labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "input_shape", tuple(int(d) for d in self.input_shape))
        object.__setattr__(self, "layers", tuple(self.layers))
        object.__setattr__(self, "class_labels", tuple(self.class_labels))
        if len(self.input_shape) != 3 or min(self.input_shape) < 1:
            raise ShapeError(f"input_shape must be 3 positive dimensions, got {self.input_shape}")
        if not self.layers:
            raise ShapeError("descriptor must contain at least one layer")
        names = [spec.name for spec in self.layers]
        if len(set(names)) != len(names):
            raise ShapeError("layer names must be unique")
        self._check_chain()
        self._check_groups()
        shapes = propagate_shapes(self)
        final = self.layers[-1]
        if final.kind != DENSE:
            raise ShapeError("the final layer must be Dense")
        if len(self.class_labels) != shapes[-1][2]:
            raise ShapeError(
                f"{len(self.class_labels)} class labels do not match the final dense layer's {shapes[-1][2]} outputs"
            )

    def _check_chain(self):
        seen_flatten = False
        for spec in self.layers:
            if spec.kind == FLATTEN:
                if seen_flatten:
                    raise ShapeError("flatten may appear exactly once")
                seen_flatten = True
            elif spec.kind == DENSE:
                if not seen_flatten:
                    raise ShapeError(f"layer {spec.name!r}: dense layers must come after flatten")
            elif seen_flatten and spec.kind != RELU:
                raise ShapeError(f"layer {spec.name!r}: only Dense and ReLU may follow flatten")
        if not seen_flatten:
            raise ShapeError("descriptor must contain a flatten layer")

    def _check_groups(self):
        prev = GroupTag(0, 0)
        unit_convs: dict[int, int] = {}
        unit_module: dict[int, int] = {}
        for i, spec in enumerate(self.layers):
            tag = spec.group
            if i > 0 and (tag.unit < prev.unit or tag.module < prev.module):
                raise ShapeError(f"layer {spec.name!r}: group tags must be non-decreasing along the chain")
            if spec.kind == CONV:
                unit_convs[tag.unit] = unit_convs.get(tag.unit, 0) + 1
                if unit_convs[tag.unit] > 1:
                    raise ShapeError(f"unit {tag.unit} holds more than one convolutional layer")
            if unit_module.setdefault(tag.unit, tag.module) != tag.module:
                raise ShapeError(f"unit {tag.unit} is tagged with two different modules")
            prev = tag

    def layer_index(self, name: str) -> int:
        for i, spec in enumerate(self.layers):
            if spec.name == name:
                return i
        valid = ", ".join(spec.name for spec in self.layers)
        raise QueryError(f"no layer named {name!r}; valid layers: {valid}")

    def layer(self, name: str) -> LayerSpec:
        return self.layers[self.layer_index(name)]

    @property
    def layer_names(self) -> tuple[str, ...]:
        return tuple(spec.name for spec in self.layers)


def propagate_shapes(descriptor: ArchitectureDescriptor) -> list[tuple[int, int, int]]:
    """Output shape of every layer, in network order."""
    shapes = []
    cur = descriptor.input_shape
    for spec in descriptor.layers:
        cur = output_shape(cur, spec)
        shapes.append(cur)
    return shapes


def _own_f32(arr, shape=None) -> np.ndarray:
    out = np.ascontiguousarray(arr, dtype=np.float32)
    if shape is not None and tuple(out.shape) != tuple(shape):
        raise ModelError(f"weight array has shape {out.shape}, expected {tuple(shape)}")
    if out is arr:
        out = out.copy()
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ConvWeights:
    kernels: np.ndarray  # (out_channels, in_channels, k, k) float32
    biases: np.ndarray  # (out_channels,) float32

    def __post_init__(self):
        object.__setattr__(self, "kernels", _own_f32(self.kernels))
        object.__setattr__(self, "biases", _own_f32(self.biases))


@dataclass(frozen=True)
class DenseWeights:
    matrix: np.ndarray  # (out_units, in_length) float32
    biases: np.ndarray  # (out_units,) float32

    def __post_init__(self):
        object.__setattr__(self, "matrix", _own_f32(self.matrix))
        object.__setattr__(self, "biases", _own_f32(self.biases))


class WeightStore:
    """Per-layer parameter arrays keyed by layer name."""

    def __init__(self, entries: dict[str, ConvWeights | DenseWeights]):
        self._entries = dict(entries)

    def conv(self, name: str) -> ConvWeights:
        entry = self._entries.get(name)
        if not isinstance(entry, ConvWeights):
            raise ModelError(f"no convolution weights stored for layer {name!r}")
        return entry

    def dense(self, name: str) -> DenseWeights:
        entry = self._entries.get(name)
        if not isinstance(entry, DenseWeights):
            raise ModelError(f"no dense weights stored for layer {name!r}")
        return entry

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self._entries)

    def validate_against(self, descriptor: ArchitectureDescriptor) -> None:
        """Check every parameterized layer has arrays of exactly the right shape."""
        shapes = propagate_shapes(descriptor)
        expected = set()
        cur = descriptor.input_shape
        for spec, out in zip(descriptor.layers, shapes):
            if spec.kind == CONV:
                expected.add(spec.name)
                entry = self.conv(spec.name)
                k, cin, cout = spec.hyper.kernel_size, cur[2], spec.hyper.out_channels
                if entry.kernels.shape != (cout, cin, k, k):
                    raise ModelError(
                        f"layer {spec.name!r}: kernels have shape {entry.kernels.shape}, expected {(cout, cin, k, k)}"
                    )
                if entry.biases.shape != (cout,):
                    raise ModelError(f"layer {spec.name!r}: biases have shape {entry.biases.shape}, expected {(cout,)}")
            elif spec.kind == DENSE:
                expected.add(spec.name)
                entry = self.dense(spec.name)
                units, length = spec.hyper.out_units, cur[2]
                if entry.matrix.shape != (units, length):
                    raise ModelError(
                        f"layer {spec.name!r}: dense matrix has shape {entry.matrix.shape}, expected {(units, length)}"
                    )
                if entry.biases.shape != (units,):
                    raise ModelError(f"layer {spec.name!r}: biases have shape {entry.biases.shape}, expected {(units,)}")
            cur = out
        extra = set(self._entries) - expected
        if extra:
            raise ModelError(f"weight store holds entries for unknown layers: {sorted(extra)}")


@dataclass(frozen=True)
class InferenceSession:
    """One input's complete forward pass with all per-layer outputs retained."""

    model: "ModelBundle"
    input: Tensor3
    activations: tuple[Tensor3, ...]
    logits: np.ndarray  # float32, one per class
    probabilities: np.ndarray  # float64, sums to 1

    def activation(self, layer_name: str) -> Tensor3:
        return self.activations[self.model.descriptor.layer_index(layer_name)]

    def layer_input(self, index: int) -> Tensor3:
        """The tensor fed to layer `index` (the image for index 0)."""
        return self.input if index == 0 else self.activations[index - 1]


def conv_forward(input: Tensor3, spec: LayerSpec, weights: WeightStore) -> Tensor3:
    """2-D convolution with zero padding.

    out(h, w, o) = bias(o) + sum over taps of input(h*s - p + r, w*s - p + q, i)
    * kernel[o][i](r, q), accumulated in (i, r, q) order, bias first.
    """
    if spec.kind != CONV:
        raise QueryError(f"layer {spec.name!r} is {spec.kind}, not Conv")
    hyper = spec.hyper
    oh, ow, cout = output_shape(input.shape, spec)
    entry = weights.conv(spec.name)
    k, s, p = hyper.kernel_size, hyper.stride, hyper.padding
    cin = input.channels
    if entry.kernels.shape != (cout, cin, k, k):
        raise ShapeError(
            f"layer {spec.name!r}: kernels shaped {entry.kernels.shape} do not fit input with {cin} channels"
        )
    padded = input.array
    if p > 0:
        padded = np.pad(padded, ((p, p), (p, p), (0, 0)))
    kernels, biases = entry.kernels, entry.biases
    out = np.empty((oh, ow, cout), dtype=np.float32)
    for o in range(cout):
        acc = np.full((oh, ow), biases[o], dtype=np.float32)
        for i in range(cin):
            plane = padded[:, :, i]
            for r in range(k):
                rows = slice(r, r + (oh - 1) * s + 1, s)
                for q in range(k):
                    acc += plane[rows, q:q + (ow - 1) * s + 1:s] * kernels[o, i, r, q]
        out[:, :, o] = acc
    return Tensor3(out, copy=False)


def relu_forward(input: Tensor3) -> Tensor3:
    """Elementwise max(0, x)."""
    return Tensor3(np.maximum(input.array, np.float32(0.0)), copy=False)


def maxpool_forward(input: Tensor3, pool_size: int, stride: int) -> Tensor3:
    """Per-channel max over pool_size x pool_size windows; trailing partial windows are dropped."""
    h, w, _ = input.shape
    if pool_size > h or pool_size > w:
        raise ShapeError(f"pool size {pool_size} exceeds plane {h}x{w}")
    oh = (h - pool_size) // stride + 1
    ow = (w - pool_size) // stride + 1
    arr = input.array
    out = None
    for r in range(pool_size):
        rows = slice(r, r + (oh - 1) * stride + 1, stride)
        for q in range(pool_size):
            view = arr[rows, q:q + (ow - 1) * stride + 1:stride, :]
            if out is None:
                out = view.copy()
            else:
                np.maximum(out, view, out=out)
    return Tensor3(out, copy=False)


def flatten_forward(input: Tensor3) -> Tensor3:
    """Relabel (h, w, c) storage as a (1, 1, h*w*c) vector; values are untouched."""
    return Tensor3(input.array.reshape(1, 1, -1), copy=False)


def dense_forward(flat: Tensor3, spec: LayerSpec, weights: WeightStore) -> np.ndarray:
    """Fully connected layer: logit(o) = bias(o) + sum_f matrix[o][f] * flat(f), ascending f."""
    if spec.kind != DENSE:
        raise QueryError(f"layer {spec.name!r} is {spec.kind}, not Dense")
    entry = weights.dense(spec.name)
    units, length = entry.matrix.shape
    if flat.height != 1 or flat.width != 1 or flat.channels != length:
        raise ShapeError(
            f"layer {spec.name!r}: dense matrix expects a flat input of length {length}, got shape {flat.shape}"
        )
    # np.add.accumulate is sequential by definition (r[i] = r[i-1] + a[i]), so
    # stacking bias on top of the per-feature products reproduces the scalar
    # loop ((bias + p0) + p1) + ... bit for bit.
    products = entry.matrix * flat.data
    stack = np.empty((length + 1, units), dtype=np.float32)
    stack[0] = entry.biases
    stack[1:] = products.T
    logits = np.add.accumulate(stack, axis=0)[-1]
    logits.setflags(write=False)
    return logits


# Deterministic double-precision exp: Cody-Waite argument reduction plus a
# degree-11 Taylor polynomial. Uses only correctly-rounded IEEE-754 ops, so
# results are bit-identical on every platform (libm's exp is not).
_LOG2E = 1.4426950408889634
_LN2_HI = 6.9314718036912381649e-01
_LN2_LO = 1.9082149292705877e-10
_INV_FACT = tuple(1.0 / math.factorial(i) for i in range(12))


def _exp64(x: float) -> float:
    n = math.floor(x * _LOG2E + 0.5)
    r = (x - n * _LN2_HI) - n * _LN2_LO
    p = _INV_FACT[11]
    for i in range(10, -1, -1):
        p = p * r + _INV_FACT[i]
    return math.ldexp(p, n)


def softmax(logits) -> np.ndarray:
    """Probabilities p(i) = exp(l(i) - max) / sum exp(l(j) - max).

    Internals run in float64 and the result stays float64: rounding the
    probabilities to float32 could tie two classes whose logits differ,
    breaking the argmax-preservation guarantee.
    """
    xs = [float(v) for v in logits]
    if not xs:
        raise ShapeError("softmax requires at least one logit")
    m = max(xs)
    exps = [_exp64(v - m) for v in xs]
    total = 0.0
    for e in exps:
        total += e
    out = np.array([e / total for e in exps], dtype=np.float64)
    out.setflags(write=False)
    return out


def _apply_layer(cur: Tensor3, spec: LayerSpec, weights: WeightStore) -> tuple[Tensor3, np.ndarray | None]:
    if spec.kind == CONV:
        return conv_forward(cur, spec, weights), None
    if spec.kind == RELU:
        return relu_forward(cur), None
    if spec.kind == MAX_POOL:
        return maxpool_forward(cur, spec.hyper.pool_size, spec.hyper.stride), None
    if spec.kind == FLATTEN:
        return flatten_forward(cur), None
    logits = dense_forward(cur, spec, weights)
    return Tensor3(logits.reshape(1, 1, -1), copy=False), logits


def _run(model: "ModelBundle", input: Tensor3, timings: list[float] | None = None) -> InferenceSession:
    descriptor = model.descriptor
    if input.shape != descriptor.input_shape:
        raise ShapeError(f"input shape {input.shape} does not match model input {descriptor.input_shape}")
    activations = []
    logits = None
    cur = input
    for spec in descriptor.layers:
        start = perf_counter() if timings is not None else 0.0
        try:
            cur, maybe_logits = _apply_layer(cur, spec, model.weights)
        except ShapeError as exc:
            raise ShapeError(f"layer {spec.name!r}: {exc}") from exc
        except ModelError as exc:
            raise ModelError(f"layer {spec.name!r}: {exc}") from exc
        if timings is not None:
            timings.append(perf_counter() - start)
        if maybe_logits is not None:
            logits = maybe_logits
        activations.append(cur)
    probabilities = softmax(logits)
    return InferenceSession(
        model=model,
        input=input,
        activations=tuple(activations),
        logits=logits,
        probabilities=probabilities,
    )


def run_forward(model: "ModelBundle", input: Tensor3) -> InferenceSession:
    """Run the full forward pass, retaining every layer's output.

    Pure and deterministic: identical (model, input) pairs produce bitwise
    identical sessions.
    """
    return _run(model, input)
