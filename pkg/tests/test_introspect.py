import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convlens import (
    BoundsError,
    QueryError,
    Tensor3,
    color_scales,
    decompose_conv_neuron,
    edge_topology,
    flatten_wiring,
    layer_scale_map,
    make_fixture_model,
    run_forward,
    tensor_new,
    trace_window,
)
from convlens.engine import CONV, RELU
from convlens.introspect import ColorScale
from conftest import random_descriptor, random_input
from oracles import max_abs_ref


class TestDecomposition:
    def test_one_intermediate_per_input_channel(self, fixture_session):
        d = decompose_conv_neuron(fixture_session, "conv_1_1", 0)
        assert len(d.intermediates) == 3  # RGB input
        d2 = decompose_conv_neuron(fixture_session, "conv_2_2", 4)
        assert len(d2.intermediates) == 10

    def test_single_channel_zero_bias_equals_activation(self):
        rng = np.random.RandomState(4)
        desc = None
        # single input channel, bias forced to zero by rebuilding the store
        from convlens import ArchitectureDescriptor, ConvHyper, ConvWeights, DenseHyper, LayerSpec, WeightStore
        from convlens.engine import DENSE, FLATTEN
        from convlens.model_io import ModelBundle

        layers = (
            LayerSpec(CONV, "conv", ConvHyper(3, 1, 0, 2)),
            LayerSpec(FLATTEN, "flatten"),
            LayerSpec(DENSE, "output", DenseHyper(2)),
        )
        desc = ArchitectureDescriptor((6, 6, 1), layers, ("a", "b"))
        base = make_fixture_model(3, desc)
        conv = base.weights.conv("conv")
        store = WeightStore({
            "conv": ConvWeights(kernels=conv.kernels, biases=np.zeros(2, np.float32)),
            "output": base.weights.dense("output"),
        })
        bundle = ModelBundle(desc, store, {"name": "t"})
        session = run_forward(bundle, random_input(rng, (6, 6, 1)))
        d = decompose_conv_neuron(session, "conv", 1)
        stored = session.activation("conv").array[:, :, 1]
        assert np.array_equal(d.intermediates[0].array[:, :, 0], stored)

    def test_reconstruction_within_tolerance(self, fixture_session):
        for layer in ("conv_1_1", "conv_1_2", "conv_2_1", "conv_2_2"):
            stored = fixture_session.activation(layer)
            for ch in range(stored.channels):
                d = decompose_conv_neuron(fixture_session, layer, ch)
                residual = np.abs(d.reconstructed.array[:, :, 0] - stored.array[:, :, ch]).max()
                assert residual <= 1e-5

    def test_non_conv_layer_rejected(self, fixture_session):
        with pytest.raises(QueryError):
            decompose_conv_neuron(fixture_session, "relu_1_1", 0)

    def test_bad_channel(self, fixture_session):
        with pytest.raises(BoundsError):
            decompose_conv_neuron(fixture_session, "conv_1_1", 10)


class TestFlattenWiring:
    def test_edge_count(self, fixture_session):
        w = flatten_wiring(fixture_session, 0)
        assert len(w.edges) == 1690

    def test_first_edge_source(self, fixture_session):
        w = flatten_wiring(fixture_session, 3)
        assert w.edges[0].source == (0, 0, 0)
        assert w.edges[0].flat_index == 0
        # flat index formula: (h * 13 + w) * 10 + c
        assert w.edges[130].source == (1, 0, 0)

    def test_logit_reconstruction_sport_car(self, fixture_session):
        labels = fixture_session.model.descriptor.class_labels
        idx = labels.index("sport car")
        w = flatten_wiring(fixture_session, idx)
        total = w.bias + float(np.sum(np.float64([e.contribution for e in w.edges])))
        assert abs(total - float(fixture_session.logits[idx])) <= 1e-4

    def test_contribution_product(self, fixture_session):
        w = flatten_wiring(fixture_session, 1)
        e = w.edges[777]
        assert e.contribution == float(np.float32(np.float32(e.source_value) * np.float32(e.weight)))

    def test_bad_class(self, fixture_session):
        with pytest.raises(BoundsError):
            flatten_wiring(fixture_session, 10)


class TestTraceWindow:
    def test_relu_negative_pixel(self, fixture_session):
        desc = fixture_session.model.descriptor
        idx = desc.layer_index("relu_1_1")
        source = fixture_session.layer_input(idx).array
        negatives = np.argwhere(source < 0)
        h, w, c = (int(v) for v in negatives[0])
        t = trace_window(fixture_session, "relu_1_1", c, h, w)
        assert t.result == 0.0
        assert t.input_window.size == 1

    def test_maxpool_window(self):
        from convlens import ArchitectureDescriptor, ConvHyper, DenseHyper, LayerSpec, PoolHyper
        from convlens.engine import DENSE, FLATTEN, MAX_POOL

        layers = (
            LayerSpec(MAX_POOL, "pool", PoolHyper(2, 2)),
            LayerSpec(FLATTEN, "flatten"),
            LayerSpec(DENSE, "output", DenseHyper(2)),
        )
        desc = ArchitectureDescriptor((2, 2, 1), layers, ("a", "b"))
        bundle = make_fixture_model(0, desc)
        x = Tensor3(np.array([[1.0, -2.0], [3.0, 0.0]], np.float32).reshape(2, 2, 1))
        session = run_forward(bundle, x)
        t = trace_window(session, "pool", 0, 0, 0)
        assert t.result == 3.0
        assert t.input_window.values.tolist() == [[1.0, -2.0], [3.0, 0.0]]

    def test_conv_ones(self):
        from convlens import ArchitectureDescriptor, ConvHyper, ConvWeights, DenseHyper, LayerSpec, WeightStore
        from convlens.engine import DENSE, FLATTEN
        from convlens.model_io import ModelBundle

        layers = (
            LayerSpec(CONV, "conv", ConvHyper(3, 1, 0, 1)),
            LayerSpec(FLATTEN, "flatten"),
            LayerSpec(DENSE, "output", DenseHyper(2)),
        )
        desc = ArchitectureDescriptor((4, 4, 1), layers, ("a", "b"))
        store = WeightStore({
            "conv": ConvWeights(kernels=np.ones((1, 1, 3, 3), np.float32), biases=np.zeros(1, np.float32)),
            "output": DenseWeights_for(2, 4),
        })
        bundle = ModelBundle(desc, store, {"name": "t"})
        session = run_forward(bundle, tensor_new(4, 4, 1, 1.0))
        t = trace_window(session, "conv", 0, 1, 1, in_channel=0)
        assert np.all(t.products == 1.0)
        assert t.result == 9.0

    def test_conv_matches_intermediate(self, fixture_session):
        d = decompose_conv_neuron(fixture_session, "conv_2_1", 2)
        t = trace_window(fixture_session, "conv_2_1", 2, 5, 7, in_channel=4)
        assert t.result == d.intermediates[4].at(5, 7, 0)
        assert np.array_equal(t.products, t.input_window.values * t.kernel)

    def test_trace_matches_stored_activation(self, fixture_session):
        t = trace_window(fixture_session, "relu_1_2", 3, 10, 11)
        assert t.result == fixture_session.activation("relu_1_2").at(10, 11, 3)
        t = trace_window(fixture_session, "max_pool_2", 6, 4, 9)
        assert t.result == fixture_session.activation("max_pool_2").at(4, 9, 6)

    def test_conv_requires_in_channel(self, fixture_session):
        with pytest.raises(QueryError):
            trace_window(fixture_session, "conv_1_1", 0, 0, 0)

    def test_out_of_range(self, fixture_session):
        with pytest.raises(BoundsError):
            trace_window(fixture_session, "relu_1_1", 0, 62, 0)


def DenseWeights_for(units, length):
    from convlens import DenseWeights

    return DenseWeights(matrix=np.zeros((units, length), np.float32), biases=np.zeros(units, np.float32))


class TestColorScales:
    def test_layer_scope_max_abs(self, small_session):
        scales = {s.scope_key: s for s in color_scales(small_session, "layer")}
        desc = small_session.model.descriptor
        for spec, act in zip(desc.layers, small_session.activations):
            assert scales[spec.name].max_abs == float(np.abs(act.array).max())

    def test_position_definition(self):
        scale = ColorScale(scope="layer", scope_key="x", max_abs=3.0)
        assert scale.position(-2.0) == pytest.approx(-2.0 / 3.0)
        assert scale.position(0.0) == 0.0
        assert scale.position(99.0) == 1.0

    def test_zero_scope_all_white(self):
        scale = ColorScale(scope="layer", scope_key="x", max_abs=0.0)
        assert scale.position(0.0) == 0.0

    def test_global_matches_full_scan(self, small_session):
        (scale,) = color_scales(small_session, "global")
        expected = max_abs_ref([a.array for a in small_session.activations])
        assert scale.max_abs == pytest.approx(expected, rel=1e-6)

    def test_scope_monotonicity(self, fixture_session):
        by_layer = layer_scale_map(fixture_session, "layer")
        by_unit = layer_scale_map(fixture_session, "unit")
        by_module = layer_scale_map(fixture_session, "module")
        by_global = layer_scale_map(fixture_session, "global")
        for name in fixture_session.model.descriptor.layer_names:
            assert by_global[name].max_abs >= by_module[name].max_abs
            assert by_module[name].max_abs >= by_unit[name].max_abs
            assert by_unit[name].max_abs >= by_layer[name].max_abs

    @given(v=st.floats(min_value=-5.0, max_value=5.0, allow_nan=False))
    def test_oddness(self, v):
        scale = ColorScale(scope="layer", scope_key="x", max_abs=5.0)
        assert scale.position(-v) == -scale.position(v)

    def test_unknown_scope(self, small_session):
        with pytest.raises(QueryError):
            color_scales(small_session, "galaxy")


class TestTopology:
    def test_demo_network(self, fixture_bundle):
        entries = {e.layer_name: e for e in edge_topology(fixture_bundle)}
        relu = entries["relu_1_1"]
        assert relu.connectivity == "one_to_one"
        assert relu.edge_count == 10
        conv1 = entries["conv_1_1"]
        assert conv1.connectivity == "full"
        assert conv1.edge_count == 30  # 3 input channels x 10 neurons
        dense = entries["output"]
        assert dense.connectivity == "full"
        assert dense.in_neurons == 10  # pre-flatten channels
        assert dense.edge_count == 100
        assert entries["flatten"].edge_count == 1690

    @given(seed=st.integers(0, 2**31 - 1))
    @settings(deadline=None, max_examples=20)
    def test_counts_consistent(self, seed):
        rng = np.random.RandomState(seed)
        desc = random_descriptor(rng)
        bundle = make_fixture_model(seed, desc)
        for entry in edge_topology(bundle):
            if entry.connectivity == "full":
                assert entry.edge_count == entry.in_neurons * entry.out_neurons
            elif entry.connectivity == "one_to_one":
                assert entry.edge_count == entry.out_neurons == entry.in_neurons
