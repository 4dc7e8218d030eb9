import numpy as np
import pytest

from voiceid import net as N
from voiceid.dsp import FeatureKind, FeatureMatrix
from voiceid.errors import (
    BadMagicError,
    ChecksumMismatchError,
    DimensionMismatchError,
    LabelOutOfRangeError,
    TruncatedFileError,
    VersionMismatchError,
)


def tiny_net(seed=0, input_dim=2, hidden=3, n_layers=1, dtype=np.float64):
    rng = np.random.default_rng(seed)
    return N.init_net(
        feature_kind=None,
        hidden=hidden,
        n_layers=n_layers,
        input_dim=input_dim,
        rng=rng,
        dtype=dtype,
    )


def feats(frames, kind=FeatureKind.SpecdB):
    return FeatureMatrix(np.asarray(frames, dtype=np.float32), kind)


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def cell(params, x, h, c):
    hh = len(h)
    a = params.w @ x + params.u @ h + params.b
    gi = sigmoid(a[:hh])
    gf = sigmoid(a[hh : 2 * hh])
    gg = np.tanh(a[2 * hh : 3 * hh])
    go = sigmoid(a[3 * hh :])
    c2 = gf * c + gi * gg
    return go * np.tanh(c2), c2


class TestForward:
    def test_embedding_always_512(self):
        rng = np.random.default_rng(0)
        net = N.init_net(FeatureKind.SpecdB, rng=rng)
        for t in (16, 125):
            fm = feats(rng.normal(size=(t, 257)))
            emb = N.blstm_forward(net, fm)
            assert emb.shape == (512,)

    def test_zero_network_zero_embedding(self):
        net = tiny_net()
        for layer in net.layers:
            for d in (layer.fwd, layer.bwd):
                d.w[:] = 0.0
                d.u[:] = 0.0
                d.b[:] = 0.0
        fm = feats(np.random.default_rng(1).normal(size=(5, 2)))
        assert np.all(N.blstm_forward(net, fm) == 0.0)

    def test_matches_straight_line_oracle(self):
        # tiny net, fixed 4-frame input, recurrences unrolled by hand
        net = tiny_net(seed=3)
        rng = np.random.default_rng(4)
        x = rng.normal(size=(4, 2))
        emb = N.blstm_forward(net, feats(x))

        z = np.zeros(3)
        f = net.layers[0].fwd
        h1, c1 = cell(f, x[0], z, z)
        h2, c2 = cell(f, x[1], h1, c1)
        h3, c3 = cell(f, x[2], h2, c2)
        h4, _ = cell(f, x[3], h3, c3)
        b = net.layers[0].bwd
        g1, d1 = cell(b, x[3], z, z)
        g2, d2 = cell(b, x[2], g1, d1)
        g3, d3 = cell(b, x[1], g2, d2)
        g4, _ = cell(b, x[0], g3, d3)
        oracle = np.concatenate([h4, g4])
        assert np.allclose(emb, oracle, atol=1e-10)

    def test_kind_mismatch(self):
        net = N.init_net(FeatureKind.SpecdB, hidden=4, n_layers=1)
        fm = feats(np.zeros((3, 40)), kind=FeatureKind.MFCC)
        with pytest.raises(DimensionMismatchError):
            N.blstm_forward(net, fm)


class TestClassify:
    def test_zero_head(self):
        net = tiny_net()
        head = N.ClassifierHead(np.zeros((2, 6)), np.zeros(2))
        fm = feats(np.random.default_rng(0).normal(size=(4, 2)))
        assert np.all(N.classify_forward(net, head, fm) == 0.0)

    def test_selector_head(self):
        net = tiny_net()
        head = N.ClassifierHead(np.eye(2, 6), np.zeros(2))
        fm = feats(np.random.default_rng(0).normal(size=(4, 2)))
        emb = N.blstm_forward(net, fm)
        logits = N.classify_forward(net, head, fm)
        assert np.allclose(logits, emb[:2])

    def test_random_head_matches_matvec(self):
        net = tiny_net(seed=8)
        rng = np.random.default_rng(9)
        head = N.ClassifierHead(rng.normal(size=(3, 6)), rng.normal(size=3))
        fm = feats(rng.normal(size=(4, 2)))
        emb = N.blstm_forward(net, fm)
        oracle = np.array([float(head.w[k] @ emb + head.b[k]) for k in range(3)])
        assert np.allclose(N.classify_forward(net, head, fm), oracle)


class TestCrossEntropy:
    def test_uniform_logits(self):
        for c in (2, 5, 10):
            loss, _ = N.cross_entropy(np.zeros(c), 0)
            assert np.isclose(loss, np.log(c))

    def test_extreme_logits_stable(self):
        loss, grad = N.cross_entropy(np.array([1000.0, 0.0]), 0)
        assert loss < 1e-6
        assert np.all(np.isfinite(grad))
        loss, grad = N.cross_entropy(np.array([1e6, -1e6]), 1)
        assert np.isfinite(loss)
        assert np.all(np.isfinite(grad))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        logits = rng.normal(size=6)
        _, grad = N.cross_entropy(logits, 2)
        eps = 1e-6
        for k in range(6):
            bumped = logits.copy()
            bumped[k] += eps
            lp, _ = N.cross_entropy(bumped, 2)
            bumped[k] -= 2 * eps
            lm, _ = N.cross_entropy(bumped, 2)
            fd = (lp - lm) / (2 * eps)
            assert abs(fd - grad[k]) <= 1e-5 * max(1.0, abs(fd))

    def test_label_out_of_range(self):
        with pytest.raises(LabelOutOfRangeError):
            N.cross_entropy(np.zeros(3), 3)


def gradcheck(seed, rel_tol=1e-4, max_tol=1e-3, step=1e-4):
    rng = np.random.default_rng(seed)
    net = tiny_net(seed=seed)
    head = N.ClassifierHead(
        rng.normal(size=(2, 6)) * 0.5, rng.normal(size=2) * 0.1
    )
    x = rng.normal(size=(1, 4, 2))
    label = [int(rng.integers(0, 2))]
    _, grads = N.batch_backward(net, head, x, label)
    params = N.params_dict(net, head)
    rels = []
    for name, p in params.items():
        flat = p.ravel()
        g = grads[name].ravel()
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + step
            lp, _ = N.batch_backward(net, head, x, label)
            flat[idx] = orig - step
            lm, _ = N.batch_backward(net, head, x, label)
            flat[idx] = orig
            fd = (lp - lm) / (2 * step)
            denom = max(abs(fd), abs(g[idx]), 1e-8)
            rels.append(abs(fd - g[idx]) / denom)
    rels = np.array(rels)
    return rels


class TestBackward:
    def test_gradcheck_tiny_net(self):
        rels = gradcheck(seed=0)
        assert (rels <= 1e-4).mean() >= 0.99
        assert rels.max() <= 1e-3

    def test_zero_gradient_propagates(self):
        # force dlogits ~ 0 by making the label's logit dominate
        net = tiny_net(seed=1)
        head = N.ClassifierHead(np.zeros((2, 6)), np.array([1000.0, -1000.0]))
        x = np.random.default_rng(2).normal(size=(1, 4, 2))
        _, grads = N.batch_backward(net, head, x, [0])
        for g in grads.values():
            assert np.allclose(g, 0.0, atol=1e-12)

    def test_direction_swap_symmetry(self):
        # symmetric net (bwd params copied from fwd): reversing the input
        # swaps the roles of the two directions for a sum-of-embedding loss
        net = tiny_net(seed=5)
        layer = net.layers[0]
        layer.bwd.w[:] = layer.fwd.w
        layer.bwd.u[:] = layer.fwd.u
        layer.bwd.b[:] = layer.fwd.b
        rng = np.random.default_rng(6)
        x = rng.normal(size=(1, 4, 2))

        def sum_grads(xin):
            emb, caches = N.blstm_stack_forward(net, xin)
            demb = np.ones_like(emb)
            return N.blstm_stack_backward(net, caches, demb)

        g_fwdio = sum_grads(x)
        g_rev = sum_grads(np.ascontiguousarray(x[:, ::-1]))
        for tensor in ("w", "u", "b"):
            assert np.allclose(
                g_fwdio[f"layer0.fwd.{tensor}"], g_rev[f"layer0.bwd.{tensor}"]
            )
            assert np.allclose(
                g_fwdio[f"layer0.bwd.{tensor}"], g_rev[f"layer0.fwd.{tensor}"]
            )


class TestAdam:
    def test_zero_gradient_keeps_params(self):
        cfg = N.TrainConfig(learning_rate=0.1)
        params = {"w": np.array([1.0, -2.0])}
        state = N.AdamState()
        N.adam_step(params, {"w": np.zeros(2)}, state, cfg)
        assert np.allclose(params["w"], [1.0, -2.0])

    def test_first_step_magnitude(self):
        cfg = N.TrainConfig(learning_rate=0.01)
        params = {"w": np.zeros(3)}
        g = np.array([0.5, -2.0, 1e-3])
        N.adam_step(params, {"w": g}, N.AdamState(), cfg)
        # bias-corrected first step is ~ -lr * sign(g)
        assert np.allclose(params["w"], -0.01 * np.sign(g), rtol=1e-4)

    def test_scalar_quadratic_convergence(self):
        cfg = N.TrainConfig(learning_rate=0.1)
        params = {"w": np.array([1.0])}
        state = N.AdamState()
        for _ in range(100):
            N.adam_step(params, {"w": 2.0 * params["w"]}, state, cfg)
        assert abs(params["w"][0]) < 0.1

    def test_shape_mismatch(self):
        cfg = N.TrainConfig()
        with pytest.raises(DimensionMismatchError):
            N.adam_step(
                {"w": np.zeros(2)}, {"w": np.zeros(3)}, N.AdamState(), cfg
            )


class TestAccounting:
    def test_spectral_count(self):
        net = N.init_net(FeatureKind.SpecdB)
        assert N.param_count(net) == 4202496
        assert N.memory_bytes(net) == 16809984

    def test_mfcc_count(self):
        net = N.init_net(FeatureKind.MFCC)
        assert N.param_count(net) == 3758080
        assert N.memory_bytes(net) == 15032320

    def test_minimal_formula(self):
        net = N.init_net(feature_kind=None, hidden=1, n_layers=1, input_dim=1)
        assert N.param_count(net) == 2 * 4 * (1 + 1 + 1) * 1


class TestWeightsFile:
    def make_net(self):
        rng = np.random.default_rng(0)
        net = N.init_net(
            FeatureKind.MFCC, hidden=5, n_layers=2, rng=rng, dtype=np.float32
        )
        head = N.init_head(3, net.embed_dim, rng=rng)
        return net, head

    def test_roundtrip_bit_exact(self, tmp_path):
        net, head = self.make_net()
        path = tmp_path / "w.bin"
        N.save_weights(net, path, head)
        net2, head2 = N.load_weights(path)
        assert net2.feature_kind is FeatureKind.MFCC
        p1 = N.params_dict(net, head)
        p2 = N.params_dict(net2, head2)
        for name in p1:
            assert np.array_equal(p1[name], p2[name]), name

    def test_no_head_roundtrip(self, tmp_path):
        net, _ = self.make_net()
        path = tmp_path / "w.bin"
        N.save_weights(net, path)
        net2, head2 = N.load_weights(path)
        assert head2 is None
        assert N.param_count(net2) == N.param_count(net)

    def test_corrupt_payload(self, tmp_path):
        net, head = self.make_net()
        path = tmp_path / "w.bin"
        N.save_weights(net, path, head)
        blob = bytearray(path.read_bytes())
        blob[100] ^= 0xFF
        path.write_bytes(bytes(blob))
        with pytest.raises(ChecksumMismatchError):
            N.load_weights(path)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "w.bin"
        path.write_bytes(b"NOTMAGIC" + b"\x00" * 64)
        with pytest.raises(BadMagicError):
            N.load_weights(path)

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "w.bin"
        path.write_bytes(b"BLSVW999" + b"\x00" * 64)
        with pytest.raises(VersionMismatchError):
            N.load_weights(path)

    def test_truncated(self, tmp_path):
        net, head = self.make_net()
        path = tmp_path / "w.bin"
        N.save_weights(net, path, head)
        blob = path.read_bytes()
        path.write_bytes(blob[: len(blob) // 2])
        with pytest.raises(TruncatedFileError):
            N.load_weights(path)
