"""Canonical JSON payload builders shared by the CLI and the bridge.

Canonical means: sorted object keys, compact separators, floats rendered by
Python's shortest round-trip repr, no NaN/Inf. Two serializations of the same
data are byte-identical, which is what golden-file testing relies on.
"""

from __future__ import annotations

import base64
import hashlib
import json

import numpy as np

from .engine import CONV, InferenceSession
from .introspect import (
    ColorScale,
    ConvDecomposition,
    FlattenWiring,
    LayerTopology,
    WindowTrace,
    decompose_conv_neuron,
    edge_topology,
    flatten_wiring,
    layer_scale_map,
)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _floats(array: np.ndarray) -> list:
    """Nested lists of Python floats (exact float32 -> float64 widening)."""
    return array.astype(np.float64).tolist()


def input_digest(session: InferenceSession) -> str:
    """Content hash of the input: sha256 over the raw float32 pixel bytes."""
    return hashlib.sha256(session.input.array.tobytes()).hexdigest()


def build_activation_dump(
    session: InferenceSession,
    scope: str = "layer",
    layer_filter: list[str] | None = None,
    include_intermediates: bool = False,
    encoding: str = "values",
) -> dict:
    """The overview document: per-layer activations, shapes, scale bounds, and
    class probabilities. With include_intermediates, every conv decomposition
    and every class's flatten wiring are appended."""
    descriptor = session.model.descriptor
    scales = layer_scale_map(session, scope)
    if layer_filter is not None:
        for name in layer_filter:
            descriptor.layer_index(name)  # raises QueryError on unknown names
    per_layer = []
    for spec, activation in zip(descriptor.layers, session.activations):
        if layer_filter is not None and spec.name not in layer_filter:
            continue
        entry = {
            "layerName": spec.name,
            "kind": spec.kind,
            "shape": list(activation.shape),
            "colorScaleMaxAbs": scales[spec.name].max_abs,
        }
        if encoding == "b64":
            entry["valuesB64"] = base64.b64encode(activation.array.astype("<f4").tobytes()).decode("ascii")
        else:
            entry["values"] = _floats(activation.array)
        per_layer.append(entry)
    doc = {
        "modelName": session.model.name,
        "inputDigest": input_digest(session),
        "classProbabilities": {
            label: float(p) for label, p in zip(descriptor.class_labels, session.probabilities)
        },
        "perLayer": per_layer,
    }
    if include_intermediates:
        decomps = []
        for spec in descriptor.layers:
            if spec.kind != CONV:
                continue
            for channel in range(spec.hyper.out_channels):
                decomps.append(decomposition_payload(decompose_conv_neuron(session, spec.name, channel)))
        doc["convDecompositions"] = decomps
        doc["flattenWirings"] = [
            wiring_payload(flatten_wiring(session, index)) for index in range(len(descriptor.class_labels))
        ]
    return doc


def decomposition_payload(d: ConvDecomposition) -> dict:
    return {
        "layerName": d.layer_name,
        "outChannel": d.out_channel,
        "bias": float(d.bias),
        "kernels": _floats(d.kernels),
        "intermediates": [_floats(t.array[:, :, 0]) for t in d.intermediates],
        "reconstructed": _floats(d.reconstructed.array[:, :, 0]),
    }


def wiring_payload(w: FlattenWiring) -> dict:
    return {
        "classIndex": w.class_index,
        "bias": float(w.bias),
        "edges": [
            {
                "source": list(edge.source),
                "flatIndex": edge.flat_index,
                "sourceValue": edge.source_value,
                "weight": edge.weight,
                "contribution": edge.contribution,
            }
            for edge in w.edges
        ],
    }


def trace_payload(t: WindowTrace) -> dict:
    payload = {
        "kind": t.kind,
        "window": {
            "originRow": t.input_window.origin_row,
            "originCol": t.input_window.origin_col,
            "size": t.input_window.size,
            "values": _floats(t.input_window.values),
        },
        "result": float(t.result),
    }
    if t.kernel is not None:
        payload["kernel"] = _floats(t.kernel)
    if t.products is not None:
        payload["products"] = _floats(t.products)
    return payload


def scales_payload(scales: list[ColorScale]) -> list[dict]:
    return [{"scope": s.scope, "scopeKey": s.scope_key, "maxAbs": s.max_abs} for s in scales]


def topology_payload(entries: tuple[LayerTopology, ...]) -> list[dict]:
    return [
        {
            "layerName": e.layer_name,
            "connectivity": e.connectivity,
            "inNeurons": e.in_neurons,
            "outNeurons": e.out_neurons,
            "edgeCount": e.edge_count,
        }
        for e in entries
    ]


def topology_for_model(model) -> list[dict]:
    return topology_payload(edge_topology(model))
