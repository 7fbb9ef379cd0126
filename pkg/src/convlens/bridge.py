"""Request/response boundary so a UI or any host drives the core without
linking against its internals.

One session owns at most one loaded model and one current input. Requests are
plain dictionaries {"op": ..., "args": {...}}; every request yields exactly
one response, either {"bridgeVersion": 1, "ok": payload} or
{"bridgeVersion": 1, "err": {"code", "message"}}. Error codes: BAD_OP for an
unknown op, NO_INPUT for queries issued before set_input, BOUNDS for
out-of-range coordinates or unknown layer references, VALIDATION for invalid
models, images, or shapes.
"""

from __future__ import annotations

import base64
import threading

import numpy as np

from . import introspect, model_io, serialize
from .engine import run_forward
from .errors import (
    BoundsError,
    ConvlensError,
    ImageError,
    ModelError,
    QueryError,
    ShapeError,
    ValidationError,
)
from .tensor import Tensor3

BRIDGE_VERSION = 1

BAD_OP = "BAD_OP"
NO_INPUT = "NO_INPUT"
BOUNDS = "BOUNDS"
VALIDATION = "VALIDATION"


class _BridgeError(ConvlensError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _error_code(exc: ConvlensError) -> str:
    if isinstance(exc, _BridgeError):
        return exc.code
    if isinstance(exc, (BoundsError, QueryError)):
        return BOUNDS
    if isinstance(exc, (ShapeError, ModelError, ImageError, ValidationError)):
        return VALIDATION
    return VALIDATION


class BridgeSession:
    """One model + one current input + the cached inference session.

    Requests are processed serially; a lock enforces the one-at-a-time
    contract even if a host misbehaves. Only load_model and set_input mutate
    state."""

    def __init__(self):
        self._lock = threading.Lock()
        self._model = None
        self._session = None

    def handle(self, request: dict) -> dict:
        with self._lock:
            try:
                payload = self._dispatch(request)
                return {"bridgeVersion": BRIDGE_VERSION, "ok": payload}
            except ConvlensError as exc:
                return {"bridgeVersion": BRIDGE_VERSION, "err": {"code": _error_code(exc), "message": str(exc)}}

    def _dispatch(self, request: dict):
        if not isinstance(request, dict) or "op" not in request:
            raise _BridgeError(BAD_OP, "request must be an object with an 'op' field")
        op = request["op"]
        args = request.get("args") or {}
        handler = _OPS.get(op)
        if handler is None:
            raise _BridgeError(BAD_OP, f"unknown op {op!r}; valid ops: {', '.join(sorted(_OPS))}")
        return handler(self, args)

    # -- state-changing ops ------------------------------------------------

    def _op_load_model(self, args):
        manifest = args.get("manifest")
        weights_b64 = args.get("weightsB64")
        if manifest is None or weights_b64 is None:
            raise ValidationError("load_model needs 'manifest' (object or string) and 'weightsB64'")
        manifest_bytes = manifest.encode() if isinstance(manifest, str) else serialize.canonical_json(manifest).encode()
        try:
            weight_bytes = base64.b64decode(weights_b64, validate=True)
        except Exception as exc:
            raise ValidationError(f"weightsB64 is not valid base64: {exc}") from exc
        self._model = model_io.load_model(manifest_bytes, weight_bytes)
        self._session = None
        descriptor = self._model.descriptor
        return {
            "modelName": self._model.name,
            "inputShape": list(descriptor.input_shape),
            "layers": [{"name": s.name, "kind": s.kind} for s in descriptor.layers],
            "classLabels": list(descriptor.class_labels),
        }

    def _op_set_input(self, args):
        model = self._require_model()
        tensor = args.get("tensor")
        if not isinstance(tensor, dict) or "shape" not in tensor:
            raise ValidationError("set_input needs 'tensor': {shape: [h, w, c], values | b64}")
        shape = tuple(int(d) for d in tensor["shape"])
        if "b64" in tensor:
            raw = base64.b64decode(tensor["b64"], validate=True)
            flat = np.frombuffer(raw, dtype="<f4")
            if flat.size != int(np.prod(shape)):
                raise ShapeError(f"b64 payload holds {flat.size} floats, shape {shape} needs {int(np.prod(shape))}")
            values = flat.reshape(shape)
        elif "values" in tensor:
            values = np.asarray(tensor["values"], dtype=np.float32)
            if values.shape != shape:
                raise ShapeError(f"values have shape {values.shape}, declared shape is {shape}")
        else:
            raise ValidationError("tensor needs either 'values' or 'b64'")
        image = model_io.InputImage(pixels=Tensor3(values))
        if image.pixels.shape != model.descriptor.input_shape:
            raise ShapeError(
                f"input shape {image.pixels.shape} does not match model input {model.descriptor.input_shape}"
            )
        self._session = run_forward(model, image.pixels)
        return {
            "inputDigest": serialize.input_digest(self._session),
            "classProbabilities": {
                label: float(p)
                for label, p in zip(model.descriptor.class_labels, self._session.probabilities)
            },
        }

    # -- queries -----------------------------------------------------------

    def _op_get_overview(self, args):
        session = self._require_session()
        return serialize.build_activation_dump(
            session,
            scope=args.get("scope", "layer"),
            layer_filter=args.get("layers"),
            include_intermediates=bool(args.get("includeIntermediates", False)),
            encoding="b64" if args.get("encoding") == "b64" else "values",
        )

    def _op_get_conv_decomposition(self, args):
        session = self._require_session()
        d = introspect.decompose_conv_neuron(session, str(args.get("layer")), int(args.get("outChannel", 0)))
        return serialize.decomposition_payload(d)

    def _op_get_flatten_wiring(self, args):
        session = self._require_session()
        w = introspect.flatten_wiring(session, int(args.get("classIndex", 0)))
        return serialize.wiring_payload(w)

    def _op_get_window_trace(self, args):
        session = self._require_session()
        in_channel = args.get("inChannel")
        t = introspect.trace_window(
            session,
            str(args.get("layer")),
            int(args.get("outChannel", 0)),
            int(args.get("row", 0)),
            int(args.get("col", 0)),
            in_channel=None if in_channel is None else int(in_channel),
        )
        return serialize.trace_payload(t)

    def _op_get_color_scales(self, args):
        session = self._require_session()
        return serialize.scales_payload(introspect.color_scales(session, args.get("scope", "layer")))

    def _op_get_topology(self, args):
        model = self._require_model()
        return serialize.topology_for_model(model)

    # -- helpers -----------------------------------------------------------

    def _require_model(self):
        if self._model is None:
            raise ValidationError("no model loaded; send load_model first")
        return self._model

    def _require_session(self):
        self._require_model()
        if self._session is None:
            raise _BridgeError(NO_INPUT, "no input set; send set_input first")
        return self._session


_OPS = {
    "load_model": BridgeSession._op_load_model,
    "set_input": BridgeSession._op_set_input,
    "get_overview": BridgeSession._op_get_overview,
    "get_conv_decomposition": BridgeSession._op_get_conv_decomposition,
    "get_flatten_wiring": BridgeSession._op_get_flatten_wiring,
    "get_window_trace": BridgeSession._op_get_window_trace,
    "get_color_scales": BridgeSession._op_get_color_scales,
    "get_topology": BridgeSession._op_get_topology,
}


def handle_request(session: BridgeSession, request: dict) -> dict:
    """Dispatch one request against one session; always returns one response."""
    return session.handle(request)
