"""Command-line front door: classify, dump, render, bench, make-fixture.

Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 I/O error.
All data output is deterministic for identical inputs; only timings vary.
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from pathlib import Path
from time import perf_counter

from . import introspect, model_io, serialize
from .engine import CONV, InferenceSession, _run, run_forward
from .errors import ConvlensError
from .heatmap import render_plane
from .model_io import ModelBundle
from .tensor import Tensor3

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_bundle(model_path: str) -> ModelBundle:
    manifest_path = Path(model_path)
    manifest_bytes = manifest_path.read_bytes()
    manifest = json.loads(manifest_bytes)
    weights_name = manifest.get("weightsFile", "weights.bin") if isinstance(manifest, dict) else "weights.bin"
    weight_bytes = (manifest_path.parent / weights_name).read_bytes()
    return model_io.load_model(manifest_bytes, weight_bytes)


def _load_input(image_path: str, bundle: ModelBundle) -> Tensor3:
    data = Path(image_path).read_bytes()
    return model_io.ingest_image(data, bundle.descriptor.input_shape).pixels


def _session(args) -> InferenceSession:
    bundle = _load_bundle(args.model)
    image = _load_input(args.image, bundle)
    return run_forward(bundle, image)


def cmd_classify(args) -> int:
    session = _session(args)
    labels = session.model.descriptor.class_labels
    probs = session.probabilities
    order = sorted(range(len(labels)), key=lambda i: (-probs[i], i))
    width = max(len(label) for label in labels)
    for i in order:
        print(f"{labels[i]:<{width}}  {probs[i]:.4f}")
    return EXIT_OK


def cmd_dump(args) -> int:
    session = _session(args)
    layer_filter = args.layers.split(",") if args.layers else None
    doc = serialize.build_activation_dump(
        session,
        scope=args.scope,
        layer_filter=layer_filter,
        include_intermediates=args.include_intermediates,
    )
    text = serialize.canonical_json(doc) + "\n"
    Path(args.out).write_text(text, encoding="ascii")
    return EXIT_OK


def cmd_render(args) -> int:
    session = _session(args)
    descriptor = session.model.descriptor
    index = descriptor.layer_index(args.layer)
    activation = session.activations[index]
    scale = introspect.layer_scale_map(session, args.scope)[args.layer]
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for channel in range(activation.channels):
        image = render_plane(activation.plane(channel), scale, args.scale)
        image.save(out_dir / f"{args.layer}_{channel:02d}.png")
    print(f"wrote {activation.channels} heatmaps to {out_dir}")
    return EXIT_OK


def _percentile(samples: list[float], fraction: float) -> float:
    ordered = sorted(samples)
    rank = max(0, min(len(ordered) - 1, int(round(fraction * (len(ordered) - 1)))))
    return ordered[rank]


def _introspection_sweep(session: InferenceSession) -> None:
    descriptor = session.model.descriptor
    for spec in descriptor.layers:
        if spec.kind == CONV:
            introspect.decompose_conv_neuron(session, spec.name, 0)
    introspect.flatten_wiring(session, 0)
    introspect.color_scales(session, "global")


def cmd_bench(args) -> int:
    bundle = _load_bundle(args.model)
    image = model_io.synthetic_image(bundle.descriptor.input_shape, seed=123).pixels
    layer_names = bundle.descriptor.layer_names
    per_layer = [0.0] * len(layer_names)
    forward_times = []
    full_times = []
    for _ in range(args.iterations):
        timings: list[float] = []
        start = perf_counter()
        session = _run(bundle, image, timings)
        forward = perf_counter() - start
        _introspection_sweep(session)
        full_times.append(perf_counter() - start)
        forward_times.append(forward)
        for i, t in enumerate(timings):
            per_layer[i] += t

    def stats_line(label: str, samples: list[float]) -> str:
        mean = statistics.fmean(samples)
        median = statistics.median(samples)
        return f"{label:<26} mean {mean * 1e3:8.3f} ms   median {median * 1e3:8.3f} ms   p95 {_percentile(samples, 0.95) * 1e3:8.3f} ms"

    print(f"model: {bundle.name}   input: synthetic(seed=123) {bundle.descriptor.input_shape}   iterations: {args.iterations}")
    print(stats_line("forward pass:", forward_times))
    print(stats_line("forward + introspection:", full_times))
    print("per-layer mean:")
    forward_mean = statistics.fmean(forward_times)
    layer_total = 0.0
    for name, total in zip(layer_names, per_layer):
        mean = total / args.iterations
        layer_total += mean
        share = 100.0 * mean / forward_mean if forward_mean > 0 else 0.0
        print(f"  {name:<12} {mean * 1e3:8.3f} ms  ({share:5.1f}%)")
    coverage = 100.0 * layer_total / forward_mean if forward_mean > 0 else 0.0
    print(f"  layers total {layer_total * 1e3:8.3f} ms  ({coverage:5.1f}% of forward mean)")
    return EXIT_OK


def cmd_make_fixture(args) -> int:
    descriptor = model_io.tiny_vgg()
    bundle = model_io.make_fixture_model(args.seed, descriptor, name=args.name)
    manifest_bytes, weight_bytes = model_io.save_model(bundle)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.json").write_bytes(manifest_bytes)
    (out_dir / "weights.bin").write_bytes(weight_bytes)
    print(f"wrote {out_dir / 'manifest.json'} and {out_dir / 'weights.bin'} (seed={args.seed})")
    return EXIT_OK


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="convlens", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(func=func)
        return p

    p = add("classify", cmd_classify, "print class probabilities for an image, descending")
    p.add_argument("--model", required=True, help="path to the model manifest JSON")
    p.add_argument("--image", required=True, help="path to a PNG or raw RGB8 image")

    p = add("dump", cmd_dump, "write the full activation dump as canonical JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True, help="output file path")
    p.add_argument("--layers", default=None, help="comma-separated layer names to include (default: all)")
    p.add_argument("--include-intermediates", action="store_true",
                   help="append every conv decomposition and flatten wiring")
    p.add_argument("--scope", default="layer", choices=list(introspect.SCOPES))

    p = add("render", cmd_render, "render one layer's channels as heatmap PNGs")
    p.add_argument("--model", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--layer", required=True, help="layer name to render")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--scale", type=_positive_int, default=1, help="integer nearest-neighbor upscale factor")
    p.add_argument("--scope", default="layer", choices=list(introspect.SCOPES))

    p = add("bench", cmd_bench, "time forward passes on a synthetic input")
    p.add_argument("--model", required=True)
    p.add_argument("--iterations", type=_positive_int, default=20)

    p = add("make-fixture", cmd_make_fixture, "generate a deterministic pseudo-random model bundle")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--name", default="tiny_vgg_fixture")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except ConvlensError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def console_main() -> None:
    sys.exit(main())


if __name__ == "__main__":
    console_main()
