import base64
import gzip
import json
from pathlib import Path

import numpy as np
import pytest

from convlens.bridge import BAD_OP, BOUNDS, BRIDGE_VERSION, NO_INPUT, VALIDATION, BridgeSession, handle_request
from conftest import DATA_DIR

FIXTURE_DIR = Path(DATA_DIR) / "fixture42"


def load_golden_dump():
    raw = gzip.decompress((Path(DATA_DIR) / "golden_dump.json.gz").read_bytes())
    return json.loads(raw)


@pytest.fixture()
def session_with_input(golden_input):
    session = BridgeSession()
    manifest = (FIXTURE_DIR / "manifest.json").read_text()
    weights = base64.b64encode((FIXTURE_DIR / "weights.bin").read_bytes()).decode()
    resp = handle_request(session, {"op": "load_model", "args": {"manifest": manifest, "weightsB64": weights}})
    assert "ok" in resp
    pixels = golden_input.pixels.array
    resp = handle_request(session, {"op": "set_input", "args": {"tensor": {
        "shape": list(pixels.shape),
        "b64": base64.b64encode(pixels.astype("<f4").tobytes()).decode(),
    }}})
    assert "ok" in resp
    return session


class TestEnvelope:
    def test_every_response_carries_version(self, session_with_input):
        for request in [{"op": "get_topology"}, {"op": "nonsense"}, {"op": "get_color_scales"}]:
            resp = handle_request(session_with_input, request)
            assert resp["bridgeVersion"] == BRIDGE_VERSION

    def test_unknown_op_is_bad_op(self):
        session = BridgeSession()
        resp = handle_request(session, {"op": "launch_rockets"})
        assert resp["err"]["code"] == BAD_OP

    def test_requests_yield_responses_in_order(self, session_with_input):
        requests = [
            {"op": "get_color_scales", "args": {"scope": "layer"}},
            {"op": "get_window_trace", "args": {"layer": "relu_1_1", "outChannel": 0, "row": 0, "col": 0}},
            {"op": "get_topology"},
        ]
        responses = [handle_request(session_with_input, r) for r in requests]
        assert len(responses) == 3
        assert all("ok" in r for r in responses)
        assert isinstance(responses[0]["ok"], list)
        assert responses[1]["ok"]["kind"] == "ReLU"
        assert responses[2]["ok"][0]["layerName"] == "conv_1_1"


class TestErrors:
    def test_query_before_set_input_is_no_input(self):
        session = BridgeSession()
        manifest = (FIXTURE_DIR / "manifest.json").read_text()
        weights = base64.b64encode((FIXTURE_DIR / "weights.bin").read_bytes()).decode()
        handle_request(session, {"op": "load_model", "args": {"manifest": manifest, "weightsB64": weights}})
        resp = handle_request(session, {"op": "get_conv_decomposition", "args": {"layer": "conv_1_1", "outChannel": 0}})
        assert resp["err"]["code"] == NO_INPUT

    def test_query_before_load_model_is_validation(self):
        session = BridgeSession()
        resp = handle_request(session, {"op": "get_overview"})
        assert resp["err"]["code"] == VALIDATION

    def test_out_of_range_is_bounds(self, session_with_input):
        resp = handle_request(session_with_input, {"op": "get_flatten_wiring", "args": {"classIndex": 99}})
        assert resp["err"]["code"] == BOUNDS

    def test_unknown_layer_is_bounds(self, session_with_input):
        resp = handle_request(session_with_input, {"op": "get_window_trace",
                                                   "args": {"layer": "conv_9", "outChannel": 0, "row": 0, "col": 0}})
        assert resp["err"]["code"] == BOUNDS

    def test_bad_model_is_validation(self):
        session = BridgeSession()
        resp = handle_request(session, {"op": "load_model", "args": {"manifest": "{", "weightsB64": ""}})
        assert resp["err"]["code"] == VALIDATION

    def test_wrong_input_shape_is_validation(self, session_with_input):
        resp = handle_request(session_with_input, {"op": "set_input", "args": {"tensor": {
            "shape": [2, 2, 3], "values": np.zeros((2, 2, 3)).tolist()}}})
        assert resp["err"]["code"] == VALIDATION


class TestQueries:
    def test_overview_equals_dump_field_for_field(self, session_with_input):
        resp = handle_request(session_with_input, {"op": "get_overview"})
        assert resp["ok"] == load_golden_dump()

    def test_overview_b64_fast_path(self, session_with_input, fixture_session):
        resp = handle_request(session_with_input, {"op": "get_overview", "args": {"encoding": "b64"}})
        entry = resp["ok"]["perLayer"][9]  # max_pool_2
        raw = base64.b64decode(entry["valuesB64"])
        values = np.frombuffer(raw, dtype="<f4").reshape(entry["shape"])
        assert np.array_equal(values, fixture_session.activation("max_pool_2").array)

    def test_relu_trace_negative_pixel(self, session_with_input, fixture_session):
        source = fixture_session.activation("conv_1_1").array
        spots = np.argwhere(source < 0)
        h, w, c = (int(v) for v in spots[0])
        resp = handle_request(session_with_input, {"op": "get_window_trace",
                                                   "args": {"layer": "relu_1_1", "outChannel": c, "row": h, "col": w}})
        assert resp["ok"]["result"] == 0.0

    def test_conv_decomposition_payload(self, session_with_input):
        resp = handle_request(session_with_input, {"op": "get_conv_decomposition",
                                                   "args": {"layer": "conv_1_1", "outChannel": 2}})
        payload = resp["ok"]
        assert len(payload["intermediates"]) == 3
        assert len(payload["kernels"]) == 3
        recon = np.asarray(payload["reconstructed"])
        total = np.sum(np.asarray(payload["intermediates"]), axis=0) + payload["bias"]
        assert np.abs(recon - total).max() < 1e-5

    def test_flatten_wiring_payload(self, session_with_input, fixture_session):
        resp = handle_request(session_with_input, {"op": "get_flatten_wiring", "args": {"classIndex": 9}})
        payload = resp["ok"]
        assert len(payload["edges"]) == 1690
        total = payload["bias"] + sum(e["contribution"] for e in payload["edges"])
        assert abs(total - float(fixture_session.logits[9])) <= 1e-4

    def test_state_mutates_only_via_load_and_set(self, session_with_input):
        before = handle_request(session_with_input, {"op": "get_overview"})
        handle_request(session_with_input, {"op": "get_color_scales", "args": {"scope": "global"}})
        handle_request(session_with_input, {"op": "get_window_trace",
                                            "args": {"layer": "max_pool_1", "outChannel": 1, "row": 2, "col": 2}})
        after = handle_request(session_with_input, {"op": "get_overview"})
        assert before == after

    def test_set_input_returns_probabilities(self, golden_input, fixture_session):
        session = BridgeSession()
        manifest = (FIXTURE_DIR / "manifest.json").read_text()
        weights = base64.b64encode((FIXTURE_DIR / "weights.bin").read_bytes()).decode()
        handle_request(session, {"op": "load_model", "args": {"manifest": manifest, "weightsB64": weights}})
        resp = handle_request(session, {"op": "set_input", "args": {"tensor": {
            "shape": [64, 64, 3],
            "values": golden_input.pixels.array.astype(np.float64).tolist()}}})
        probs = resp["ok"]["classProbabilities"]
        labels = fixture_session.model.descriptor.class_labels
        for i, label in enumerate(labels):
            assert probs[label] == float(fixture_session.probabilities[i])
