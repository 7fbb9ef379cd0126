"""Development host: serves the frontend statically and embeds the bridge.

    python3 scripts/serve_ui.py [--port 8000] [--model DIR] [--seed 42]

POST /bridge carries one bridge request per call; everything else is a static
file from frontend/. If --model is omitted a fixture bundle plus two sample
images are generated on the fly and exposed under /assets/.
"""

import argparse
import base64
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from convlens import make_fixture_model, save_model, tiny_vgg
from convlens.bridge import BridgeSession, handle_request
from convlens.model_io import synthetic_pixels

ROOT = Path(__file__).parent.parent / "frontend"

CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".json": "application/json",
    ".png": "image/png",
    ".bin": "application/octet-stream",
}


def build_assets(model_dir: str | None, seed: int) -> dict[str, bytes]:
    if model_dir is not None:
        manifest = Path(model_dir, "manifest.json").read_bytes()
        weights = Path(model_dir, "weights.bin").read_bytes()
        doc = json.loads(manifest)
        shape = tuple(doc["inputShape"])
    else:
        bundle = make_fixture_model(seed, tiny_vgg(), name="tiny_vgg_fixture")
        manifest, weights = save_model(bundle)
        shape = bundle.descriptor.input_shape
    samples = []
    for i, sample_seed in enumerate((7, 123)):
        arr8 = synthetic_pixels(shape, sample_seed)
        pixels = (arr8.astype(np.float64) / 255.0).tolist()
        samples.append({"id": f"sample_{i}", "pixels": pixels})
    return {
        "assets/model/manifest.json": manifest,
        "assets/model/weights.bin": weights,
        "assets/samples.json": json.dumps(samples).encode("ascii"),
    }


def make_handler(assets: dict[str, bytes]):
    session = BridgeSession()
    lock = threading.Lock()

    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):
            pass

        def _send(self, status: int, body: bytes, content_type: str) -> None:
            self.send_response(status)
            self.send_header("content-type", content_type)
            self.send_header("content-length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def do_POST(self):
            if self.path != "/bridge":
                self._send(404, b"not found", "text/plain")
                return
            length = int(self.headers.get("content-length", "0"))
            try:
                request = json.loads(self.rfile.read(length))
            except json.JSONDecodeError:
                self._send(400, b'{"err": "request must be JSON"}', "application/json")
                return
            with lock:
                response = handle_request(session, request)
            self._send(200, json.dumps(response).encode(), "application/json")

        def do_GET(self):
            path = self.path.split("?", 1)[0].lstrip("/") or "index.html"
            if path in assets:
                body = assets[path]
            else:
                target = (ROOT / path).resolve()
                if not str(target).startswith(str(ROOT.resolve())) or not target.is_file():
                    self._send(404, b"not found", "text/plain")
                    return
                body = target.read_bytes()
            suffix = "." + path.rsplit(".", 1)[-1] if "." in path else ".html"
            self._send(200, body, CONTENT_TYPES.get(suffix, "application/octet-stream"))

    return Handler


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--model", default=None, help="directory holding manifest.json + weights.bin")
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()
    assets = build_assets(args.model, args.seed)
    server = ThreadingHTTPServer(("127.0.0.1", args.port), make_handler(assets))
    print(f"serving frontend on http://127.0.0.1:{args.port} (run `npm run build` in frontend/ first)")
    server.serve_forever()


if __name__ == "__main__":
    main()
