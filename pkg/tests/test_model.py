import numpy as np
import pytest

from test_autodiff import fd_check
from tgtopo import autodiff as ad
from tgtopo.autodiff import Tensor
from tgtopo.model import (
    VIEW_DIM,
    VIEW_NAMES,
    ModelConfig,
    TemporalGraphClassifier,
    TransformerEncoder,
    _ParamStore,
    classify,
    fusion_attention,
    global_mean_pool,
    mean_aggregation_matrix,
    sage_layer,
    time_embedding,
)
from tgtopo.temporal import from_events, static_projection


class TestTimeEmbedding:
    def test_first_row_is_alternating(self):
        e = time_embedding(3, 4)
        assert np.allclose(e[0], [0.0, 1.0, 0.0, 1.0])

    def test_known_entry(self):
        e = time_embedding(2, 4)
        assert e[1, 0] == pytest.approx(np.sin(1.0))
        assert e[1, 1] == pytest.approx(np.cos(1.0))

    def test_rows_distinct_up_to_long_sequences(self):
        e = time_embedding(200, 32)
        for i in range(199):
            assert not np.allclose(e[i], e[i + 1])

    def test_bounded(self):
        e = time_embedding(50, 32)
        assert np.abs(e).max() <= 1.0

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            time_embedding(0, 8)


class TestAggregation:
    def test_path_graph(self):
        g = from_events(3, [(0, 1, 1.0), (1, 2, 2.0)])
        m = mean_aggregation_matrix(static_projection(g))
        assert np.allclose(m, [[0, 1, 0], [0.5, 0, 0.5], [0, 1, 0]])

    def test_isolated_node_zero_row(self):
        g = from_events(3, [(0, 1, 1.0)])
        m = mean_aggregation_matrix(static_projection(g))
        assert np.allclose(m[2], 0.0)

    def test_rows_stochastic_or_zero(self):
        g = from_events(5, [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 2.0), (0, 3, 3.0)])
        m = mean_aggregation_matrix(static_projection(g))
        sums = m.sum(axis=1)
        assert all(s == pytest.approx(1.0) or s == 0.0 for s in sums)


class TestSageLayer:
    def _params(self, d_in, d_out, rng):
        store = _ParamStore(rng)
        return (
            store.matrix("ws", d_in, d_out),
            store.matrix("wn", d_in, d_out),
            store.vector("b", d_out),
        )

    def test_hand_example(self):
        # identity weights, no bias: output is relu(h_v + mean of neighbors)
        feats = Tensor(np.array([[1.0], [3.0], [5.0]]))
        agg = np.array([[0, 1, 0], [0.5, 0, 0.5], [0, 1, 0]])
        w = Tensor(np.eye(1), requires_grad=True)
        b = Tensor(np.zeros(1), requires_grad=True)
        out = sage_layer(feats, agg, w, w, b)
        assert np.allclose(out.data, [[4.0], [6.0], [8.0]])

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(3)
        w_self, w_neigh, bias = self._params(4, 6, rng)
        feats = rng.normal(size=(5, 4))
        agg = np.array(
            [
                [0, 0.5, 0.5, 0, 0],
                [1, 0, 0, 0, 0],
                [0.5, 0, 0, 0.5, 0],
                [0, 0, 0.5, 0, 0.5],
                [0, 0, 0, 1, 0],
            ]
        )
        out = sage_layer(Tensor(feats), agg, w_self, w_neigh, bias)
        perm = np.array([2, 0, 4, 1, 3])
        p = np.eye(5)[perm]
        out_p = sage_layer(Tensor(p @ feats), p @ agg @ p.T, w_self, w_neigh, bias)
        assert np.allclose(out_p.data, p @ out.data)

    def test_shape_check(self):
        rng = np.random.default_rng(0)
        w_self, w_neigh, bias = self._params(2, 3, rng)
        with pytest.raises(ad.ShapeMismatchError):
            sage_layer(Tensor(np.zeros((4, 2))), np.zeros((3, 3)), w_self, w_neigh, bias)

    def test_gradients(self):
        agg = np.array([[0, 1.0], [1.0, 0]])
        feats = np.random.default_rng(9).normal(size=(2, 3))

        def make(rng):
            store = _ParamStore(rng)
            return [
                store.matrix("ws", 3, 2),
                store.matrix("wn", 3, 2),
                store.vector("b", 2, value=0.1),
            ]

        def forward(ps):
            out = sage_layer(Tensor(feats), agg, *ps)
            pooled = global_mean_pool(out)
            from test_autodiff import weighted_sum

            return weighted_sum(pooled)

        fd_check(make, forward, n_trials=10)


class TestGlobalMeanPool:
    def test_average(self):
        out = global_mean_pool(Tensor(np.array([[1.0, 2.0], [3.0, 4.0]])))
        assert np.allclose(out.data, [2.0, 3.0])

    def test_empty_rejected(self):
        with pytest.raises(ad.ShapeMismatchError):
            global_mean_pool(Tensor(np.zeros((0, 3))))


class TestTransformerEncoder:
    def _encoder(self, seed=0, **overrides):
        cfg = ModelConfig(**overrides)
        store = _ParamStore(np.random.default_rng(seed))
        return TransformerEncoder(store, "tf", 4, cfg), store

    def test_single_token_stream(self):
        enc, _ = self._encoder()
        view, attn = enc.forward(np.ones((1, 4)))
        assert view.data.shape == (1, VIEW_DIM)
        # every attention matrix on one token is the 1x1 identity
        assert all(a.shape == (1, 1) and a[0, 0] == pytest.approx(1.0) for a in attn)

    def test_attention_rows_sum_to_one(self):
        enc, _ = self._encoder()
        rng = np.random.default_rng(4)
        _, attn = enc.forward(rng.normal(size=(6, 4)))
        assert len(attn) == 4  # 2 layers x 2 heads
        for a in attn:
            assert np.allclose(a.sum(axis=1), 1.0)

    def test_output_depends_on_order(self):
        # positional code must break permutation invariance of pooling
        enc, _ = self._encoder(seed=1)
        rng = np.random.default_rng(8)
        tokens = rng.normal(size=(5, 4))
        v1, _ = enc.forward(tokens)
        v2, _ = enc.forward(tokens[::-1].copy())
        assert not np.allclose(v1.data, v2.data)

    def test_gradients_small_encoder(self):
        tokens = np.random.default_rng(21).normal(size=(3, 4))

        def make(rng):
            cfg = ModelConfig(tf_layers=1, tf_heads=1, tf_model_dim=4, tf_ffn_dim=6)
            store = _ParamStore(rng)
            enc = TransformerEncoder(store, "tf", 4, cfg)
            make.enc = enc
            return list(store.params.values())

        def forward(ps):
            view, _ = make.enc.forward(tokens)
            from test_autodiff import weighted_sum

            return weighted_sum(view)

        fd_check(make, forward, n_trials=3)


class TestFusionAttention:
    def _qkv(self, rng):
        store = _ParamStore(rng)
        return (
            store.matrix("wq", VIEW_DIM, VIEW_DIM),
            store.matrix("wk", VIEW_DIM, VIEW_DIM),
            store.matrix("wv", VIEW_DIM, VIEW_DIM),
        )

    def test_zero_qk_gives_uniform_weights(self):
        rng = np.random.default_rng(5)
        wq = Tensor(np.zeros((VIEW_DIM, VIEW_DIM)), requires_grad=True)
        wk = Tensor(np.zeros((VIEW_DIM, VIEW_DIM)), requires_grad=True)
        wv = Tensor(rng.normal(size=(VIEW_DIM, VIEW_DIM)), requires_grad=True)
        views = Tensor(rng.normal(size=(3, VIEW_DIM)))
        fused, weights = fusion_attention(views, wq, wk, wv)
        assert np.allclose(weights, 1.0 / 3.0)
        assert fused.data.shape == (1, 3 * VIEW_DIM)

    def test_weights_sum_to_one(self):
        rng = np.random.default_rng(6)
        wq, wk, wv = self._qkv(rng)
        _, weights = fusion_attention(Tensor(rng.normal(size=(3, VIEW_DIM))), wq, wk, wv)
        assert weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert (weights >= 0).all()

    def test_shape_check(self):
        rng = np.random.default_rng(0)
        wq, wk, wv = self._qkv(rng)
        with pytest.raises(ad.ShapeMismatchError):
            fusion_attention(Tensor(np.zeros((2, VIEW_DIM))), wq, wk, wv)

    def test_gradients(self):
        views = np.random.default_rng(33).normal(size=(3, VIEW_DIM))

        def make(rng):
            return list(self._qkv(rng))

        def forward(ps):
            fused, _ = fusion_attention(Tensor(views), *ps)
            from test_autodiff import weighted_sum

            return weighted_sum(fused)

        fd_check(make, forward, n_trials=3)


class TestClassifier:
    def _toy_inputs(self, cfg, rng):
        n_windows, n_nodes = 4, 5
        phi = rng.normal(size=(n_windows, cfg.topo_dim))
        psi = np.abs(rng.normal(size=(n_windows, cfg.dos_bins)))
        feats = rng.normal(size=(n_nodes, cfg.feature_dim))
        g = from_events(n_nodes, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 3.0), (3, 4, 4.0)])
        agg = mean_aggregation_matrix(static_projection(g))
        return phi, psi, feats, agg

    def test_forward_shapes_all_modes(self):
        rng = np.random.default_rng(12)
        for mode in ("full", "concat-fuse", "gsage-only", "topo-only", "dos-only"):
            cfg = ModelConfig(mode=mode, feature_dim=3)
            model = TemporalGraphClassifier(cfg, seed=1)
            phi, psi, feats, agg = self._toy_inputs(cfg, rng)
            logits, fusion = model.forward(phi, psi, feats, agg)
            assert logits.data.shape == (1, cfg.num_classes)
            assert fusion.view_weights.sum() == pytest.approx(1.0)

    def test_ablation_weights_are_onehot(self):
        rng = np.random.default_rng(13)
        cfg = ModelConfig(mode="topo-only", feature_dim=3)
        model = TemporalGraphClassifier(cfg, seed=2)
        phi, psi, feats, agg = self._toy_inputs(cfg, rng)
        _, fusion = model.forward(phi, psi, feats, agg)
        assert fusion.view_weights.tolist() == [0.0, 1.0, 0.0]

    def test_deterministic_eval(self):
        rng = np.random.default_rng(14)
        cfg = ModelConfig(mode="full", feature_dim=3)
        phi, psi, feats, agg = self._toy_inputs(cfg, rng)
        a = TemporalGraphClassifier(cfg, seed=3).forward(phi, psi, feats, agg)
        b = TemporalGraphClassifier(cfg, seed=3).forward(phi, psi, feats, agg)
        assert np.array_equal(a[0].data, b[0].data)

    def test_checkpoint_roundtrip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(15)
        cfg = ModelConfig(mode="full", feature_dim=3)
        model = TemporalGraphClassifier(cfg, seed=4)
        path = tmp_path / "ckpt.json"
        model.save(path)
        clone = TemporalGraphClassifier.load(path)
        assert set(clone.parameters) == set(model.parameters)
        for name, t in model.parameters.items():
            assert np.array_equal(t.data, clone.parameters[name].data), name
        phi, psi, feats, agg = self._toy_inputs(cfg, rng)
        la, _ = model.forward(phi, psi, feats, agg)
        lb, _ = clone.forward(phi, psi, feats, agg)
        assert np.array_equal(la.data, lb.data)

    def test_end_to_end_gradients_tiny_model(self):
        cfg = ModelConfig(
            mode="full",
            feature_dim=2,
            hidden_dim=3,
            sage_layers=1,
            tf_layers=1,
            tf_heads=1,
            tf_model_dim=4,
            tf_ffn_dim=4,
        )
        rng0 = np.random.default_rng(50)
        phi = rng0.normal(size=(3, cfg.topo_dim))
        psi = rng0.normal(size=(3, cfg.dos_bins))
        feats = rng0.normal(size=(4, 2))
        g = from_events(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 3.0)])
        agg = mean_aggregation_matrix(static_projection(g))

        def make(rng):
            model = TemporalGraphClassifier(cfg, seed=int(rng.integers(1 << 30)))
            make.model = model
            return list(model.parameters.values())

        def forward(ps):
            logits, _ = make.model.forward(phi, psi, feats, agg)
            return ad.cross_entropy_with_logits(logits, 1)

        fd_check(make, forward, n_trials=1)

    def test_classify_is_affine(self):
        w = Tensor(np.array([[1.0, -1.0], [0.5, 2.0]]), requires_grad=True)
        b = Tensor(np.array([0.1, -0.2]), requires_grad=True)
        out = classify(Tensor(np.array([[2.0, 4.0]])), w, b)
        assert np.allclose(out.data, [[2.0 + 2.0 + 0.1, -2.0 + 8.0 - 0.2]])

    def test_bad_checkpoint_format(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": "other"}')
        with pytest.raises(ValueError):
            TemporalGraphClassifier.load(path)
