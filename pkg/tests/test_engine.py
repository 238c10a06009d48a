import numpy as np
import pytest

from deltacnn import (
    DeltaNetwork,
    DeltaPolicy,
    EngineMode,
    forward_dense,
    from_array,
    new_zeros,
    run_sequence,
    run_sweep,
)
from deltacnn.model import ConvLayer

from conftest import bits_equal, random_frames, small_net


class TestForwardDense:
    def test_deterministic(self, ref_net):
        frame = from_array(np.random.default_rng(0).uniform(0, 1, (1, 64, 64)))
        a, _ = forward_dense(ref_net, frame)
        b, _ = forward_dense(ref_net, frame)
        assert bits_equal(a, b)

    def test_zero_weights_tie_break(self):
        net = small_net(seed=0)
        for layer in net.weighted_layers():
            if isinstance(layer, ConvLayer):
                layer.weights.weights[:] = 0
                layer.weights.bias[:] = 0
            else:
                layer.weights[:] = 0
                layer.bias[:] = 0
        logits, pred = forward_dense(net, new_zeros((1, 8, 8)))
        assert not logits.any()
        assert pred == 0

    def test_reference_mac_accounting(self, ref_net):
        from deltacnn import RunMetrics

        metrics = RunMetrics(mode="dense")
        frame = from_array(np.random.default_rng(1).uniform(0, 1, (1, 64, 64)))
        forward_dense(ref_net, frame, metrics, 0)
        by_name = {r.layer_name: r for r in metrics.layer_records}
        assert by_name["conv1"].dense_macs == 589_824
        assert by_name["conv2"].dense_macs == 4_718_592
        assert by_name["head"].dense_macs == 8192 * 128 + 128 * 10
        for rec in metrics.layer_records:
            assert rec.recomputed == rec.total
            assert rec.skipped_macs == 0


class TestDeltaEquivalence:
    def test_tau_zero_bitwise_equals_dense(self):
        rng = np.random.default_rng(100)
        net = small_net(seed=5)
        frames = random_frames(rng, 6, (1, 8, 8))
        network = DeltaNetwork(net, DeltaPolicy(tau=0.0))
        prev = None
        for idx, frame in enumerate(frames):
            dense_logits, dense_pred = forward_dense(net, frame)
            result = network.forward(frame, prev, frame_idx=idx)
            assert bits_equal(result.logits, dense_logits), f"frame {idx}"
            assert result.prediction == dense_pred
            prev = frame

    def test_tau_zero_l2_also_equivalent(self):
        from deltacnn import Norm

        rng = np.random.default_rng(101)
        net = small_net(seed=6)
        frames = random_frames(rng, 4, (1, 8, 8))
        network = DeltaNetwork(net, DeltaPolicy(tau=0.0, norm=Norm.L2))
        prev = None
        for frame in frames:
            dense_logits, _ = forward_dense(net, frame)
            result = network.forward(frame, prev)
            assert bits_equal(result.logits, dense_logits)
            prev = frame

    def test_cache_completeness_per_layer(self):
        # After every frame at tau=0, each spatial cache must hold exactly
        # the dense activations of that frame.
        from deltacnn import conv2d_dense, maxpool2d_dense, relu_dense
        from deltacnn.model import PoolLayer, ReluLayer

        rng = np.random.default_rng(102)
        net = small_net(seed=7)
        frames = random_frames(rng, 5, (1, 8, 8))
        network = DeltaNetwork(net, DeltaPolicy(tau=0.0))
        prev = None
        for frame in frames:
            network.forward(frame, prev)
            x = frame
            for layer, state in zip(net.spatial_layers(), network.states):
                if isinstance(layer, ConvLayer):
                    x = conv2d_dense(x, layer.geometry, layer.weights)
                elif isinstance(layer, ReluLayer):
                    x = relu_dense(x)
                elif isinstance(layer, PoolLayer):
                    x = maxpool2d_dense(x, layer.kernel, layer.stride)
                assert bits_equal(state.cached.data, x.data), layer.name
            prev = frame

    def test_forced_all_ones_matches_dense_any_tau(self):
        # Driving every frame as a first frame degenerates to dense compute
        # regardless of tau.
        rng = np.random.default_rng(103)
        net = small_net(seed=8)
        frames = random_frames(rng, 3, (1, 8, 8))
        for tau in [0.0, 5.0]:
            network = DeltaNetwork(net, DeltaPolicy(tau=tau))
            for frame in frames:
                network.reset()
                dense_logits, _ = forward_dense(net, frame)
                result = network.forward(frame, None)
                assert bits_equal(result.logits, dense_logits)

    def test_reset_replay_equivalence(self):
        rng = np.random.default_rng(104)
        net = small_net(seed=9)
        frames = random_frames(rng, 4, (1, 8, 8))

        resetting = DeltaNetwork(net, DeltaPolicy())
        resetting.forward(frames[0], None)
        resetting.forward(frames[1], frames[0])
        resetting.reset()
        out_a = [resetting.forward(frames[2], None).logits,
                 resetting.forward(frames[3], frames[2]).logits]

        fresh = DeltaNetwork(net, DeltaPolicy())
        out_b = [fresh.forward(frames[2], None).logits,
                 fresh.forward(frames[3], frames[2]).logits]
        for a, b in zip(out_a, out_b):
            assert bits_equal(a, b)


class TestRunSequence:
    def test_repeated_frames_zero_recompute_after_first(self):
        rng = np.random.default_rng(105)
        net = small_net(seed=10)
        base = from_array(rng.uniform(0, 1, (1, 8, 8)))
        frames = [base.copy() for _ in range(10)]
        metrics = run_sequence(net, frames, EngineMode.delta())
        conv_recs = metrics.layer_frames("conv1")
        assert conv_recs[0].recomputed == conv_recs[0].total
        assert all(r.recomputed == 0 for r in conv_recs[1:])
        actual, dense = metrics.macs_by_kind({"conv", "pool"})
        assert actual * 10 == dense
        assert metrics.head_activations() == 1
        preds = [f.prediction for f in metrics.frame_records]
        assert len(set(preds)) == 1

    def test_aggregate_mac_identity(self):
        rng = np.random.default_rng(106)
        net = small_net(seed=11)
        frames = random_frames(rng, 4, (1, 8, 8))
        metrics = run_sequence(net, frames, EngineMode.delta())
        dense_run = run_sequence(net, frames, EngineMode.dense())
        for kind in ("conv", "pool", "relu"):
            actual, dense = metrics.macs_by_kind({kind})
            _, dense_ref = dense_run.macs_by_kind({kind})
            assert dense == dense_ref
            skipped = dense - actual
            assert actual + skipped == dense

    def test_accuracy_and_labels(self):
        rng = np.random.default_rng(107)
        net = small_net(seed=12)
        frames = random_frames(rng, 4, (1, 8, 8))
        dense = run_sequence(net, frames, EngineMode.dense())
        labels = [f.prediction for f in dense.frame_records]
        labels[-1] = (labels[-1] + 1) % 5
        relabeled = run_sequence(net, frames, EngineMode.dense(), labels)
        assert relabeled.accuracy() == 0.75

    def test_no_labels_no_accuracy(self):
        rng = np.random.default_rng(108)
        net = small_net(seed=13)
        metrics = run_sequence(net, random_frames(rng, 2, (1, 8, 8)), EngineMode.dense())
        assert metrics.accuracy() is None

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError):
            run_sequence(small_net(), [], EngineMode.dense())

    def test_label_length_mismatch_rejected(self):
        rng = np.random.default_rng(109)
        with pytest.raises(ValueError):
            run_sequence(small_net(), random_frames(rng, 2, (1, 8, 8)),
                         EngineMode.dense(), labels=[1])

    def test_dense_and_delta_share_dense_mac_totals(self):
        rng = np.random.default_rng(110)
        net = small_net(seed=14)
        frames = random_frames(rng, 3, (1, 8, 8))
        delta = run_sequence(net, frames, EngineMode.delta())
        dense = run_sequence(net, frames, EngineMode.dense())
        assert delta.total_dense_macs == dense.total_dense_macs
        assert dense.compute_savings() == 1.0


class TestSweep:
    def test_rows_sorted_and_deduplicated(self):
        rng = np.random.default_rng(111)
        net = small_net(seed=15)
        frames = random_frames(rng, 3, (1, 8, 8))
        rows = run_sweep(net, frames, [0.5, 0.0, 0.5, 0.1])
        assert [float(r["tau"]) for r in rows] == [0.0, 0.1, 0.5]

    def test_tau_zero_accuracy_matches_dense(self):
        rng = np.random.default_rng(112)
        net = small_net(seed=16)
        frames = random_frames(rng, 4, (1, 8, 8))
        dense = run_sequence(net, frames, EngineMode.dense())
        labels = [f.prediction for f in dense.frame_records]
        rows = run_sweep(net, frames, [0.0, 1e9], labels=labels)
        dense_acc = run_sequence(net, frames, EngineMode.dense(), labels).accuracy()
        assert float(rows[0]["accuracy"]) == dense_acc

    def test_huge_tau_only_first_frame_computes(self):
        rng = np.random.default_rng(113)
        net = small_net(seed=17)
        n = 5
        frames = random_frames(rng, n, (1, 8, 8))
        rows = run_sweep(net, frames, [1e9])
        assert float(rows[0]["savings_ratio"]) == pytest.approx(1.0 / n)
