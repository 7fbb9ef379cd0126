"""Record bridge traffic and CLI outputs for the frontend test fixtures.

Run from the repository root:

    python3 scripts/gen_ui_fixtures.py

The frontend tests replay this traffic through the UI and check that every
displayed value matches the dump/classify outputs captured here for the very
same model and input.
"""

import base64
import io
import json
import sys
from contextlib import redirect_stdout
from pathlib import Path

import numpy as np
from PIL import Image

from convlens import (
    ArchitectureDescriptor,
    ConvHyper,
    DenseHyper,
    GroupTag,
    LayerSpec,
    PoolHyper,
    ingest_image,
    make_fixture_model,
    save_model,
)
from convlens.bridge import BridgeSession, handle_request
from convlens.cli import main as cli_main
from convlens.engine import CONV, DENSE, FLATTEN, MAX_POOL, RELU
from convlens.model_io import synthetic_pixels

FIXTURES = Path(__file__).parent.parent / "frontend" / "tests" / "fixtures"


def ui_descriptor() -> ArchitectureDescriptor:
    layers = (
        LayerSpec(CONV, "conv_a", ConvHyper(kernel_size=3, stride=1, padding=0, out_channels=3), GroupTag(0, 0)),
        LayerSpec(RELU, "relu_a", None, GroupTag(0, 0)),
        LayerSpec(MAX_POOL, "pool_a", PoolHyper(2, 2), GroupTag(0, 0)),
        LayerSpec(FLATTEN, "flatten", None, GroupTag(1, 1)),
        LayerSpec(DENSE, "output", DenseHyper(out_units=4), GroupTag(1, 1)),
    )
    labels = ("koala", "pizza", "orange", "sport car")
    return ArchitectureDescriptor(input_shape=(8, 8, 3), layers=layers, class_labels=labels)


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    bundle = make_fixture_model(5, ui_descriptor(), name="ui_fixture")
    manifest_bytes, weight_bytes = save_model(bundle)
    manifest = json.loads(manifest_bytes)

    model_dir = FIXTURES / "model"
    model_dir.mkdir(exist_ok=True)
    (model_dir / "manifest.json").write_bytes(manifest_bytes)
    (model_dir / "weights.bin").write_bytes(weight_bytes)

    arr8 = synthetic_pixels((8, 8, 3), seed=21)
    png_path = FIXTURES / "input.png"
    Image.fromarray(arr8, mode="RGB").save(png_path)
    pixels = ingest_image(png_path.read_bytes(), (8, 8, 3)).pixels
    pixel_lists = pixels.array.astype(np.float64).tolist()
    (FIXTURES / "input.json").write_text(
        json.dumps({"id": "sample_21", "shape": [8, 8, 3], "pixels": pixel_lists}), encoding="ascii"
    )

    (FIXTURES / "model.json").write_text(
        json.dumps({
            "manifest": manifest,
            "weightsB64": base64.b64encode(weight_bytes).decode("ascii"),
        }),
        encoding="ascii",
    )

    # the exact request sequence the UI tests drive
    requests = [
        {"op": "load_model", "args": {"manifest": manifest, "weightsB64": base64.b64encode(weight_bytes).decode("ascii")}},
        {"op": "get_topology"},
        {"op": "set_input", "args": {"tensor": {"shape": [8, 8, 3], "values": pixel_lists}}},
        {"op": "get_overview", "args": {"scope": "layer"}},
        {"op": "get_conv_decomposition", "args": {"layer": "conv_a", "outChannel": 0}},
        {"op": "get_window_trace", "args": {"layer": "conv_a", "outChannel": 0, "row": 0, "col": 0, "inChannel": 0}},
        {"op": "get_window_trace", "args": {"layer": "conv_a", "outChannel": 0, "row": 1, "col": 2, "inChannel": 0}},
        {"op": "get_flatten_wiring", "args": {"classIndex": 3}},
        {"op": "get_window_trace", "args": {"layer": "relu_a", "outChannel": 1, "row": 0, "col": 0}},
        {"op": "get_window_trace", "args": {"layer": "relu_a", "outChannel": 1, "row": 2, "col": 3}},
        {"op": "get_window_trace", "args": {"layer": "pool_a", "outChannel": 0, "row": 0, "col": 0}},
        {"op": "get_window_trace", "args": {"layer": "pool_a", "outChannel": 0, "row": 1, "col": 1}},
        {"op": "get_overview", "args": {"scope": "global"}},
        {"op": "get_color_scales", "args": {"scope": "layer"}},
    ]
    session = BridgeSession()
    exchanges = []
    for request in requests:
        response = handle_request(session, request)
        assert "ok" in response, f"fixture request failed: {request['op']}: {response}"
        exchanges.append({"request": request, "response": response})
    (FIXTURES / "traffic.json").write_text(json.dumps(exchanges), encoding="ascii")

    # CLI outputs for the same state, for the consistency test
    dump_path = FIXTURES / "dump.json"
    code = cli_main([
        "dump", "--model", str(model_dir / "manifest.json"), "--image", str(png_path),
        "--out", str(dump_path), "--include-intermediates",
    ])
    assert code == 0
    buffer = io.StringIO()
    with redirect_stdout(buffer):
        code = cli_main(["classify", "--model", str(model_dir / "manifest.json"), "--image", str(png_path)])
    assert code == 0
    (FIXTURES / "classify.txt").write_text(buffer.getvalue(), encoding="ascii")

    print(f"wrote UI fixtures to {FIXTURES}")


if __name__ == "__main__":
    main()
