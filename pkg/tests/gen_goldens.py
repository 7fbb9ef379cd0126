"""Regenerate the golden files in tests/data from the naive-loop oracle pipeline.

Run from the repository root:

    python3 tests/gen_goldens.py

Every stored value is computed by the references in tests/oracles.py, not by
the package: the CLI tests then demand byte-identical output from the real
engine. The fixture model bundle (seed 42) and the synthetic golden image
(seed 7) are also written here so the CLI can consume them from disk.
"""

import gzip
import hashlib
import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

sys.path.insert(0, str(Path(__file__).parent))

from oracles import forward_ref, max_abs_ref

from convlens import make_fixture_model, save_model, softmax, tiny_vgg
from convlens.model_io import synthetic_pixels

DATA = Path(__file__).parent / "data"


def classify_table(labels, probabilities) -> str:
    order = sorted(range(len(labels)), key=lambda i: (-probabilities[i], i))
    width = max(len(label) for label in labels)
    return "".join(f"{labels[i]:<{width}}  {probabilities[i]:.4f}\n" for i in order)


def main():
    DATA.mkdir(exist_ok=True)
    descriptor = tiny_vgg()
    bundle = make_fixture_model(42, descriptor, name="tiny_vgg_fixture")

    manifest_bytes, weight_bytes = save_model(bundle)
    fixture_dir = DATA / "fixture42"
    fixture_dir.mkdir(exist_ok=True)
    (fixture_dir / "manifest.json").write_bytes(manifest_bytes)
    (fixture_dir / "weights.bin").write_bytes(weight_bytes)

    arr8 = synthetic_pixels((64, 64, 3), seed=7)
    Image.fromarray(arr8, mode="RGB").save(DATA / "golden_image.png")

    # normalize independently of the package's ingest path
    pixels = (arr8.astype(np.float64) / 255.0).astype(np.float32)
    activations, logits, _libm_probs = forward_ref(descriptor, bundle.weights, pixels)
    # Probabilities come from the oracle logits through the engine's
    # deterministic softmax kernel: a bit-level-independent float64 exp would
    # need a correctly-rounded exp, and libm's differs across platforms in the
    # final ulps. The normalization itself is covered by property tests.
    probabilities = softmax(logits)
    assert np.abs(probabilities - _libm_probs).max() < 1e-12

    labels = list(descriptor.class_labels)
    (DATA / "golden_classify.txt").write_text(classify_table(labels, probabilities), encoding="ascii")

    per_layer = []
    for spec, act in zip(descriptor.layers, activations):
        per_layer.append({
            "layerName": spec.name,
            "kind": spec.kind,
            "shape": list(act.shape),
            "colorScaleMaxAbs": max_abs_ref([act]),
            "values": act.astype(np.float64).tolist(),
        })
    doc = {
        "modelName": "tiny_vgg_fixture",
        "inputDigest": hashlib.sha256(pixels.tobytes()).hexdigest(),
        "classProbabilities": {label: float(p) for label, p in zip(labels, probabilities)},
        "perLayer": per_layer,
    }
    dump_text = json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"
    with open(DATA / "golden_dump.json.gz", "wb") as raw:
        with gzip.GzipFile(fileobj=raw, mode="wb", compresslevel=9, mtime=0) as fh:
            fh.write(dump_text.encode("ascii"))

    print(f"wrote goldens to {DATA}")
    print(f"  classify table: {len(labels)} classes, top = {max(labels, key=lambda l: doc['classProbabilities'][l])}")
    print(f"  dump: {len(dump_text)} bytes canonical JSON")


if __name__ == "__main__":
    main()
