"""Model bundle file format, image ingestion, and fixture generation.

A model ships as two files:

* a JSON manifest: ``{formatVersion: 1, name, inputShape, layers[],
  classLabels[], weightsFile, dtype: "f32le", totalParams, metadata}`` where
  each layer entry carries ``kind``, ``name``, ``hyper``, ``groupTag``;
* a raw weight blob: little-endian IEEE-754 binary32 values, no header and no
  padding, concatenated in manifest layer order. Within a Conv layer the
  order is kernels indexed [outChannel][inChannel][row][col] followed by one
  bias per out channel; within a Dense layer the matrix row-major
  [outUnit][flatIndex] followed by one bias per out unit.

Any script in any language can target this layout directly; no training
framework is involved.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

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
    LayerSpec,
    PoolHyper,
    WeightStore,
    propagate_shapes,
)
from .errors import ImageError, ModelError, ShapeError, ValidationError
from .serialize import canonical_json
from .tensor import Tensor3

FORMAT_VERSION = 1
DTYPE_TAG = "f32le"

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"

# Fixture PRNG: splitmix64. Output i is derived from state seed + (i+1) * GAMMA
# (mod 2^64) through two xor-multiply finalizer rounds; the top 53 bits map to
# a double in [0, 1) which is shifted to [-0.5, 0.5). The constants below are
# recorded in fixture manifests so any platform can regenerate identical blobs.
_SM64_GAMMA = 0x9E3779B97F4A7C15
_SM64_MIX1 = 0xBF58476D1CE4E5B9
_SM64_MIX2 = 0x94D049BB133111EB

_PRNG_DOC = {
    "algorithm": "splitmix64",
    "gamma": "0x9E3779B97F4A7C15",
    "mix": ["0xBF58476D1CE4E5B9", "0x94D049BB133111EB"],
    "toUniform": "(z >> 11) * 2^-53 - 0.5",
    "layerScale": "min(1, sqrt(24 / fanIn)), applied per layer before the float32 cast",
}


@dataclass(frozen=True)
class ModelBundle:
    """A validated architecture descriptor plus its weight store."""

    descriptor: ArchitectureDescriptor
    weights: WeightStore
    metadata: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return str(self.metadata.get("name", "unnamed"))


@dataclass(frozen=True)
class InputImage:
    """A normalized RGB input: float32 values in [0, 1], 3 channels."""

    pixels: Tensor3

    def __post_init__(self):
        if self.pixels.channels != 3:
            raise ShapeError(f"input images must have 3 channels, got {self.pixels.channels}")
        data = self.pixels.data
        if float(data.min()) < 0.0 or float(data.max()) > 1.0:
            raise ValidationError("input image values must lie in [0, 1]")


def parameter_plan(descriptor: ArchitectureDescriptor) -> list[tuple[LayerSpec, tuple[int, ...], tuple[int, ...]]]:
    """(spec, kernel/matrix shape, bias shape) for each parameterized layer, in order."""
    plan = []
    cur = descriptor.input_shape
    for spec, out in zip(descriptor.layers, propagate_shapes(descriptor)):
        if spec.kind == CONV:
            k = spec.hyper.kernel_size
            plan.append((spec, (spec.hyper.out_channels, cur[2], k, k), (spec.hyper.out_channels,)))
        elif spec.kind == DENSE:
            plan.append((spec, (spec.hyper.out_units, cur[2]), (spec.hyper.out_units,)))
        cur = out
    return plan


def parameter_count(descriptor: ArchitectureDescriptor) -> int:
    """Total number of float32 parameters the weight blob must contain."""
    total = 0
    for _, main_shape, bias_shape in parameter_plan(descriptor):
        total += int(np.prod(main_shape)) + int(np.prod(bias_shape))
    return total


def _hyper_to_json(spec: LayerSpec):
    if spec.kind == CONV:
        h = spec.hyper
        return {"kernelSize": h.kernel_size, "stride": h.stride, "padding": h.padding, "outChannels": h.out_channels}
    if spec.kind == MAX_POOL:
        return {"poolSize": spec.hyper.pool_size, "stride": spec.hyper.stride}
    if spec.kind == DENSE:
        return {"outUnits": spec.hyper.out_units}
    return None


def _hyper_from_json(kind: str, obj, layer_name: str):
    try:
        if kind == CONV:
            return ConvHyper(
                kernel_size=int(obj["kernelSize"]),
                stride=int(obj["stride"]),
                padding=int(obj["padding"]),
                out_channels=int(obj["outChannels"]),
            )
        if kind == MAX_POOL:
            return PoolHyper(pool_size=int(obj["poolSize"]), stride=int(obj["stride"]))
        if kind == DENSE:
            return DenseHyper(out_units=int(obj["outUnits"]))
    except (KeyError, TypeError) as exc:
        raise ModelError(f"layer {layer_name!r}: malformed hyperparameters: {exc}") from exc
    if obj is not None:
        raise ModelError(f"layer {layer_name!r}: {kind} layers carry no hyperparameters")
    return None


def descriptor_to_manifest(descriptor: ArchitectureDescriptor, metadata: dict, weights_file: str = "weights.bin") -> dict:
    """Manifest dictionary for a descriptor (weights not included)."""
    meta = {k: v for k, v in metadata.items() if k != "name"}
    return {
        "formatVersion": FORMAT_VERSION,
        "name": str(metadata.get("name", "unnamed")),
        "inputShape": list(descriptor.input_shape),
        "layers": [
            {
                "kind": spec.kind,
                "name": spec.name,
                "hyper": _hyper_to_json(spec),
                "groupTag": {"unit": spec.group.unit, "module": spec.group.module},
            }
            for spec in descriptor.layers
        ],
        "classLabels": list(descriptor.class_labels),
        "weightsFile": weights_file,
        "dtype": DTYPE_TAG,
        "totalParams": parameter_count(descriptor),
        "metadata": meta,
    }


def descriptor_from_manifest(manifest: dict) -> ArchitectureDescriptor:
    """Rebuild and validate the architecture descriptor a manifest declares."""
    try:
        layers = tuple(
            LayerSpec(
                kind=str(entry["kind"]),
                name=str(entry["name"]),
                hyper=_hyper_from_json(str(entry["kind"]), entry.get("hyper"), str(entry["name"])),
                group=GroupTag(
                    unit=int(entry.get("groupTag", {}).get("unit", 0)),
                    module=int(entry.get("groupTag", {}).get("module", 0)),
                ),
            )
            for entry in manifest["layers"]
        )
        input_shape = tuple(int(d) for d in manifest["inputShape"])
        labels = tuple(str(s) for s in manifest["classLabels"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed manifest: {exc}") from exc
    try:
        return ArchitectureDescriptor(input_shape=input_shape, layers=layers, class_labels=labels)
    except ShapeError as exc:
        raise ModelError(f"manifest declares an invalid architecture: {exc}") from exc


def load_model(manifest_bytes: bytes, weight_bytes: bytes) -> ModelBundle:
    """Parse and fully validate a model bundle from its two file payloads.

    The weight blob must contain exactly totalParams little-endian float32
    values in the layer/intra-layer order documented in this module; any
    shortfall, excess, or non-finite value is rejected with a descriptive
    error, so no partially constructed bundle ever escapes.
    """
    try:
        manifest = json.loads(manifest_bytes)
    except json.JSONDecodeError as exc:
        raise ModelError(f"manifest parse error at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(manifest, dict):
        raise ModelError("manifest must be a JSON object")
    version = manifest.get("formatVersion")
    if version != FORMAT_VERSION:
        raise ModelError(f"unsupported formatVersion {version!r}, expected {FORMAT_VERSION}")
    dtype = manifest.get("dtype")
    if dtype != DTYPE_TAG:
        raise ModelError(f"unsupported dtype {dtype!r}, expected {DTYPE_TAG!r}")
    descriptor = descriptor_from_manifest(manifest)

    expected = parameter_count(descriptor)
    declared = manifest.get("totalParams")
    if declared != expected:
        raise ModelError(f"manifest totalParams {declared} does not match the architecture's {expected}")
    expected_bytes = expected * 4
    if len(weight_bytes) != expected_bytes:
        raise ModelError(
            f"corrupt model: weight blob is {len(weight_bytes)} bytes, expected {expected_bytes} "
            f"({expected} float32 parameters)"
        )

    flat = np.frombuffer(weight_bytes, dtype="<f4").astype(np.float32, copy=False)
    entries: dict[str, ConvWeights | DenseWeights] = {}
    offset = 0
    for spec, main_shape, bias_shape in parameter_plan(descriptor):
        main_count = int(np.prod(main_shape))
        bias_count = int(np.prod(bias_shape))
        chunk = flat[offset:offset + main_count + bias_count]
        finite = np.isfinite(chunk)
        if not finite.all():
            bad = offset + int(np.argmin(finite))
            raise ModelError(f"non-finite weight in layer {spec.name!r} at parameter offset {bad}")
        main = chunk[:main_count].reshape(main_shape)
        biases = chunk[main_count:]
        if spec.kind == CONV:
            entries[spec.name] = ConvWeights(kernels=main, biases=biases)
        else:
            entries[spec.name] = DenseWeights(matrix=main, biases=biases)
        offset += main_count + bias_count

    weights = WeightStore(entries)
    weights.validate_against(descriptor)
    metadata = {"name": manifest.get("name", "unnamed")}
    extra = manifest.get("metadata", {})
    if isinstance(extra, dict):
        metadata.update(extra)
    return ModelBundle(descriptor=descriptor, weights=weights, metadata=metadata)


def save_model(bundle: ModelBundle, weights_file: str = "weights.bin") -> tuple[bytes, bytes]:
    """Serialize a bundle to (manifest bytes, weight bytes); exact inverse of load_model."""
    manifest = descriptor_to_manifest(bundle.descriptor, bundle.metadata, weights_file)
    blobs = []
    for spec, _, _ in parameter_plan(bundle.descriptor):
        if spec.kind == CONV:
            entry = bundle.weights.conv(spec.name)
            blobs.append(entry.kernels.astype("<f4").tobytes())
            blobs.append(entry.biases.astype("<f4").tobytes())
        else:
            entry = bundle.weights.dense(spec.name)
            blobs.append(entry.matrix.astype("<f4").tobytes())
            blobs.append(entry.biases.astype("<f4").tobytes())
    manifest_bytes = (canonical_json(manifest) + "\n").encode("ascii")
    return manifest_bytes, b"".join(blobs)


def ingest_image(data: bytes, target_shape: tuple[int, int, int]) -> InputImage:
    """Decode PNG or raw RGB8 bytes into a normalized [0, 1] float image.

    Pixel p maps to p / 255.0. Images whose dimensions differ from
    target_shape are rejected; this tool never resamples silently.
    """
    th, tw, tc = target_shape
    if tc != 3:
        raise ShapeError(f"model expects {tc} input channels; image ingestion supports exactly 3")
    if data[:8] == _PNG_MAGIC:
        from io import BytesIO

        from PIL import Image, UnidentifiedImageError

        try:
            with Image.open(BytesIO(data)) as img:
                if img.mode not in ("RGB", "RGBA"):
                    raise ImageError(f"unsupported PNG mode {img.mode!r}; expected 8-bit RGB or RGBA")
                arr8 = np.asarray(img.convert("RGB"), dtype=np.uint8)
        except UnidentifiedImageError as exc:
            raise ImageError(f"undecodable PNG data: {exc}") from exc
        except OSError as exc:
            raise ImageError(f"undecodable PNG data: {exc}") from exc
    elif len(data) == th * tw * 3:
        arr8 = np.frombuffer(data, dtype=np.uint8).reshape(th, tw, 3)
    else:
        raise ImageError(
            f"unrecognized image data: not a PNG and not {th * tw * 3} bytes of raw RGB8 for {th}x{tw}"
        )
    h, w = arr8.shape[0], arr8.shape[1]
    if (h, w) != (th, tw):
        raise ShapeError(f"image is {h}x{w}, model expects {th}x{tw}")
    pixels = (arr8.astype(np.float64) / 255.0).astype(np.float32)
    return InputImage(pixels=Tensor3(pixels, copy=False))


def _splitmix64_uniform(seed: int, count: int) -> np.ndarray:
    """count doubles in [-0.5, 0.5) from the documented splitmix64 stream."""
    if count == 0:
        return np.zeros(0, dtype=np.float64)
    with np.errstate(over="ignore"):
        idx = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + idx * np.uint64(_SM64_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_SM64_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_SM64_MIX2)
        z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0 ** -53 - 0.5


def make_fixture_model(seed: int, descriptor: ArchitectureDescriptor, name: str = "fixture") -> ModelBundle:
    """Deterministic pseudo-random model for tests, demos, and golden files.

    Weights come from a single splitmix64 stream in blob order. Each layer's
    values are scaled by min(1, sqrt(24 / fan_in)) -- He-style uniform, so
    post-ReLU activations keep the input's magnitude at any depth -- while
    every value remains inside [-0.5, 0.5]. The PRNG recipe is recorded in
    the manifest metadata.
    """
    plan = parameter_plan(descriptor)
    total = parameter_count(descriptor)
    stream = _splitmix64_uniform(seed, total)
    entries: dict[str, ConvWeights | DenseWeights] = {}
    offset = 0
    for spec, main_shape, bias_shape in plan:
        if spec.kind == CONV:
            fan_in = int(np.prod(main_shape[1:]))  # in_channels * k * k
        else:
            fan_in = main_shape[1]
        scale = min(1.0, (24.0 / fan_in) ** 0.5)
        main_count = int(np.prod(main_shape))
        bias_count = int(np.prod(bias_shape))
        chunk = (stream[offset:offset + main_count + bias_count] * scale).astype(np.float32)
        if spec.kind == CONV:
            entries[spec.name] = ConvWeights(kernels=chunk[:main_count].reshape(main_shape), biases=chunk[main_count:])
        else:
            entries[spec.name] = DenseWeights(matrix=chunk[:main_count].reshape(main_shape), biases=chunk[main_count:])
        offset += main_count + bias_count
    weights = WeightStore(entries)
    weights.validate_against(descriptor)
    metadata = {
        "name": name,
        "version": "1",
        "provenance": f"synthetic splitmix64 fixture, seed={seed}",
        "prng": dict(_PRNG_DOC, seed=seed),
    }
    return ModelBundle(descriptor=descriptor, weights=weights, metadata=metadata)


def make_zero_model(descriptor: ArchitectureDescriptor, name: str = "zero") -> ModelBundle:
    """All-zero weights and biases; useful for degenerate-display tests."""
    entries: dict[str, ConvWeights | DenseWeights] = {}
    for spec, main_shape, bias_shape in parameter_plan(descriptor):
        main = np.zeros(main_shape, dtype=np.float32)
        biases = np.zeros(bias_shape, dtype=np.float32)
        if spec.kind == CONV:
            entries[spec.name] = ConvWeights(kernels=main, biases=biases)
        else:
            entries[spec.name] = DenseWeights(matrix=main, biases=biases)
    metadata = {"name": name, "version": "1", "provenance": "all-zero weights"}
    return ModelBundle(descriptor=descriptor, weights=WeightStore(entries), metadata=metadata)


def synthetic_pixels(shape: tuple[int, int, int], seed: int) -> np.ndarray:
    """Deterministic uint8 pixel noise for benchmarks and golden inputs."""
    h, w, c = shape
    u = _splitmix64_uniform(seed, h * w * c) + 0.5  # [0, 1)
    return np.minimum(np.floor(u * 256.0), 255.0).astype(np.uint8).reshape(h, w, c)


def synthetic_image(shape: tuple[int, int, int], seed: int) -> InputImage:
    """Deterministic synthetic input image with values quantized to the uint8 grid."""
    arr8 = synthetic_pixels(shape, seed)
    pixels = (arr8.astype(np.float64) / 255.0).astype(np.float32)
    return InputImage(pixels=Tensor3(pixels, copy=False))


TINY_VGG_CLASSES = (
    "lifeboat",
    "ladybug",
    "pizza",
    "bell pepper",
    "school bus",
    "koala",
    "espresso",
    "red panda",
    "orange",
    "sport car",
)


def tiny_vgg() -> ArchitectureDescriptor:
    """The demonstration architecture: two (conv, relu, conv, relu, pool) blocks,
    3x3 kernels with stride 1 and no padding, 10 filters per conv, 2x2 pooling,
    64x64x3 input, and 10 output classes."""
    conv = lambda: ConvHyper(kernel_size=3, stride=1, padding=0, out_channels=10)
    layers = (
        LayerSpec(CONV, "conv_1_1", conv(), GroupTag(0, 0)),
        LayerSpec(RELU, "relu_1_1", None, GroupTag(0, 0)),
        LayerSpec(CONV, "conv_1_2", conv(), GroupTag(1, 0)),
        LayerSpec(RELU, "relu_1_2", None, GroupTag(1, 0)),
        LayerSpec(MAX_POOL, "max_pool_1", PoolHyper(2, 2), GroupTag(1, 0)),
        LayerSpec(CONV, "conv_2_1", conv(), GroupTag(2, 1)),
        LayerSpec(RELU, "relu_2_1", None, GroupTag(2, 1)),
        LayerSpec(CONV, "conv_2_2", conv(), GroupTag(3, 1)),
        LayerSpec(RELU, "relu_2_2", None, GroupTag(3, 1)),
        LayerSpec(MAX_POOL, "max_pool_2", PoolHyper(2, 2), GroupTag(3, 1)),
        LayerSpec(FLATTEN, "flatten", None, GroupTag(4, 2)),
        LayerSpec(DENSE, "output", DenseHyper(out_units=10), GroupTag(4, 2)),
    )
    return ArchitectureDescriptor(input_shape=(64, 64, 3), layers=layers, class_labels=TINY_VGG_CLASSES)
