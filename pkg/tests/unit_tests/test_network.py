"""Unit tests for the forward pass, batch normalization and dropout."""

import math

import numpy as np
import pytest

from mobility_stress.exceptions import BatchTooSmall, StaleCache
from mobility_stress.nn import (
    Activation,
    LayerSpec,
    Mode,
    Network,
    backward,
    cross_entropy,
    default_architecture,
    forward,
    predict,
    predict_proba,
    softmax,
)


SOFTMAX_OUT = LayerSpec(out_dim=3, activation=Activation.SOFTMAX)


def default_net(seed: int = 0, **kwargs) -> Network:
    return Network(12, default_architecture(), seed=seed, **kwargs)


class TestArchitecture:
    """Test layer specs and network construction."""

    def test_default_shapes(self) -> None:
        """12 -> 57 -> 35 -> 35 -> 3, with dropout only in hidden layers."""
        net = default_net()
        shapes = [layer.W.shape for layer in net.layers]
        assert shapes == [(57, 12), (35, 57), (35, 35), (3, 35)]
        assert [s.dropout_rate for s in net.specs] == [0.35, 0.25, 0.15, 0.0]
        assert net.n_classes == 3

    def test_same_seed_same_weights(self) -> None:
        """Initialisation is reproducible."""
        a, b = default_net(3), default_net(3)
        for key, value in a.parameters().items():
            np.testing.assert_array_equal(value, b.parameters()[key])

    def test_mismatched_dropout_list(self) -> None:
        """Every hidden layer needs a dropout rate."""
        with pytest.raises(ValueError, match="dropout rates"):
            default_architecture((10, 10), (0.1,))

    @pytest.mark.parametrize(
        "layers, match",
        [
            ([LayerSpec(out_dim=3)], "last layer"),
            ([SOFTMAX_OUT] * 2, "only the last"),
            ([SOFTMAX_OUT.model_copy(update={"dropout_rate": 0.1})], "dropout"),
            ([], "at least one"),
        ],
    )
    def test_invalid_stacks(self, layers, match: str) -> None:
        """Softmax goes last and only last, without dropout."""
        with pytest.raises(ValueError, match=match):
            Network(4, layers)

    def test_state_dict_round_trip(self) -> None:
        """Loading a state reproduces the outputs of its source."""
        source, target = default_net(1), default_net(2)
        x = np.random.default_rng(0).normal(size=(5, 12))
        target.load_state_dict(source.state_dict())
        np.testing.assert_array_equal(
            predict_proba(target, x), predict_proba(source, x)
        )

    def test_state_dict_mismatch(self) -> None:
        """A state from another architecture is refused."""
        other = Network(12, default_architecture((8,), (0.1,)))
        with pytest.raises(ValueError):
            default_net().load_state_dict(other.state_dict())


class TestForward:
    """Test Train and Infer passes."""

    def test_softmax_rows_sum_to_one(self) -> None:
        """10,000 random inputs give probability rows in either mode."""
        net = default_net()
        x = np.random.default_rng(1).normal(scale=3.0, size=(10_000, 12))
        for mode in (Mode.INFER, Mode.TRAIN):
            probs, _ = forward(net, x, mode, rng=np.random.default_rng(2))
            assert probs.shape == (10_000, 3)
            assert np.all(probs >= 0)
            np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)

    def test_softmax_large_logits(self) -> None:
        """Shifting by the row maximum keeps huge logits finite."""
        probs = softmax(np.array([[1000.0, 1000.0, -1000.0]]))
        np.testing.assert_allclose(probs, [[0.5, 0.5, 0.0]])

    def test_batch_statistics_normalise(self) -> None:
        """In Train mode every normalised column has mean 0 and variance 1."""
        net = default_net(bn_eps=1e-12)
        x = np.random.default_rng(3).normal(2.0, 5.0, size=(256, 12))
        _, cache = forward(net, x, Mode.TRAIN, rng=np.random.default_rng(0))
        assert cache is not None
        for layer in cache.layers:
            assert layer.xhat is not None
            np.testing.assert_allclose(layer.xhat.mean(axis=0), 0.0, atol=1e-5)
            np.testing.assert_allclose(layer.xhat.var(axis=0), 1.0, atol=1e-5)

    def test_running_statistics_update(self) -> None:
        """One Train step moves running stats by (1 - momentum) of the batch stats."""
        net = default_net(bn_momentum=0.9)
        x = np.random.default_rng(4).normal(size=(32, 12))
        z = x @ net.layers[0].W.T + net.layers[0].b
        forward(net, x, Mode.TRAIN, rng=np.random.default_rng(0))
        first = net.layers[0]
        np.testing.assert_allclose(first.running_mean, 0.1 * z.mean(axis=0), atol=1e-12)
        expected_var = 0.9 + 0.1 * z.var(axis=0)
        np.testing.assert_allclose(first.running_var, expected_var, atol=1e-12)

    def test_frozen_running_statistics(self) -> None:
        """`update_running=False` leaves running stats alone."""
        net = default_net()
        x = np.ones((4, 12)) * np.arange(4)[:, None]
        forward(net, x, Mode.TRAIN, rng=np.random.default_rng(0), update_running=False)
        for layer in net.layers:
            assert not layer.running_mean.any()

    def test_dropout_masks_are_inverted(self) -> None:
        """Kept units are scaled by 1/(1-rate); dropped units are zero."""
        net = default_net()
        x = np.random.default_rng(5).normal(size=(400, 12))
        _, cache = forward(net, x, Mode.TRAIN, rng=np.random.default_rng(6))
        assert cache is not None
        for spec, mask in zip(net.specs, cache.masks):
            if spec.dropout_rate == 0:
                assert mask is None
                continue
            assert mask is not None
            kept = 1.0 / (1.0 - spec.dropout_rate)
            assert set(np.unique(mask).tolist()) <= {0.0, kept}
            assert (mask == 0).mean() == pytest.approx(spec.dropout_rate, abs=0.02)

    def test_infer_is_deterministic(self) -> None:
        """No dropout and fixed statistics at inference."""
        net = default_net()
        x = np.random.default_rng(7).normal(size=(1, 12))
        np.testing.assert_array_equal(predict_proba(net, x), predict_proba(net, x))
        assert predict(net, x).shape == (1,)

    def test_single_row_train_batch(self) -> None:
        """Batch statistics need two rows."""
        with pytest.raises(BatchTooSmall):
            forward(default_net(), np.zeros((1, 12)), Mode.TRAIN)

    def test_bad_batches(self) -> None:
        """Wrong width or non-finite input is rejected."""
        with pytest.raises(ValueError, match="shape"):
            forward(default_net(), np.zeros((3, 11)), Mode.INFER)
        bad = np.zeros((3, 12))
        bad[1, 4] = np.inf
        with pytest.raises(ValueError, match="non-finite"):
            forward(default_net(), bad, Mode.INFER)

    def test_hand_computed_infer_pass(self) -> None:
        """A 2 -> 2 -> 3 net matches a scalar re-derivation of every layer."""
        net = Network(2, [LayerSpec(out_dim=2), SOFTMAX_OUT])
        hidden, out = net.layers
        hidden.W[...] = [[0.5, -0.25], [1.0, 0.75]]
        hidden.b[...] = [0.1, -0.2]
        hidden.running_mean[...] = [0.2, -0.1]
        hidden.running_var[...] = [4.0, 0.25]
        hidden.gamma[...] = [1.5, 0.5]
        hidden.beta[...] = [0.0, 0.1]
        out.W[...] = [[1.0, -1.0], [0.5, 0.5], [-0.3, 2.0]]
        out.b[...] = [0.0, 0.1, -0.1]
        x = [1.0, -2.0]
        eps = net.bn_eps

        def layer(h, W, b, mean, var, gamma, beta):
            z = [sum(w * v for w, v in zip(row, h)) + bias for row, bias in zip(W, b)]
            return [
                g * (zi - m) / math.sqrt(s + eps) + be
                for zi, m, s, g, be in zip(z, mean, var, gamma, beta)
            ]

        h1 = [
            math.tanh(y)
            for y in layer(
                x,
                [[0.5, -0.25], [1.0, 0.75]],
                [0.1, -0.2],
                [0.2, -0.1],
                [4.0, 0.25],
                [1.5, 0.5],
                [0.0, 0.1],
            )
        ]
        logits = layer(
            h1,
            [[1.0, -1.0], [0.5, 0.5], [-0.3, 2.0]],
            [0.0, 0.1, -0.1],
            [0.0] * 3,
            [1.0] * 3,
            [1.0] * 3,
            [0.0] * 3,
        )
        total = sum(math.exp(v) for v in logits)
        expected = [math.exp(v) / total for v in logits]

        probs, cache = forward(net, np.array([x]), Mode.INFER)
        assert cache is None
        np.testing.assert_allclose(probs[0], expected, rtol=0, atol=1e-12)

    def test_dropout_preserves_the_mean(self) -> None:
        """Averaged over many masks the inverted-dropout output equals its input."""
        net = Network(
            3,
            [
                LayerSpec(out_dim=4, dropout_rate=0.35, batch_norm=False),
                SOFTMAX_OUT.model_copy(update={"batch_norm": False}),
            ],
            seed=8,
        )
        x = np.tile([[0.9, -0.4, 1.3]], (200_000, 1))
        _, cache = forward(net, x, Mode.TRAIN, rng=np.random.default_rng(9))
        assert cache is not None
        hidden = cache.layers[0]
        assert hidden.mask is not None
        averaged = (hidden.activated * hidden.mask).mean(axis=0)
        np.testing.assert_allclose(averaged, hidden.activated[0], rtol=0.01)


class TestBackward:
    """Test loss and cache checks."""

    def test_cross_entropy_floor(self) -> None:
        """A zero probability on the true class costs -ln(1e-12), not infinity."""
        probs = np.array([[1.0, 0.0, 0.0], [0.2, 0.3, 0.5]])
        expected = (-math.log(1e-12) - math.log(0.5)) / 2
        assert cross_entropy(probs, np.array([1, 2])) == pytest.approx(expected)

    def test_stale_after_update(self) -> None:
        """A cache from before a parameter change cannot be replayed."""
        net = default_net()
        x = np.random.default_rng(0).normal(size=(4, 12))
        _, cache = forward(net, x, Mode.TRAIN)
        assert cache is not None
        net.bump_version()
        with pytest.raises(StaleCache):
            backward(net, cache, np.array([0, 1, 2, 0]))

    def test_label_count_mismatch(self) -> None:
        """Labels must match the cached batch."""
        net = default_net()
        x = np.random.default_rng(0).normal(size=(4, 12))
        _, cache = forward(net, x, Mode.TRAIN)
        assert cache is not None
        with pytest.raises(StaleCache):
            backward(net, cache, np.array([0, 1, 2]))

    def test_gradient_keys_match_parameters(self) -> None:
        """Every parameter receives a gradient of its own shape."""
        net = default_net()
        x = np.random.default_rng(0).normal(size=(8, 12))
        _, cache = forward(net, x, Mode.TRAIN)
        assert cache is not None
        grads = backward(net, cache, np.arange(8) % 3)
        params = net.parameters()
        assert set(grads) == set(params)
        assert all(grads[k].shape == params[k].shape for k in params)

    def test_uniform_probabilities_cost_ln3(self) -> None:
        """Three equally likely classes cost ln 3 whatever the labels."""
        probs = np.full((4, 3), 1.0 / 3.0)
        assert cross_entropy(probs, np.array([0, 1, 2, 0])) == pytest.approx(
            math.log(3.0), rel=1e-12
        )

    def test_output_gradient_with_zero_weights(self) -> None:
        """Zero output weights give p = 1/3 and dL/dz = (p - onehot) / n."""
        net = Network(
            4,
            [
                LayerSpec(out_dim=5),
                SOFTMAX_OUT.model_copy(update={"batch_norm": False}),
            ],
            seed=1,
        )
        net.layers[1].W[...] = 0.0
        x = np.random.default_rng(2).normal(size=(6, 4))
        labels = np.array([0, 1, 2, 2, 1, 0])
        probs, cache = forward(net, x, Mode.TRAIN)
        assert cache is not None
        np.testing.assert_allclose(probs, 1.0 / 3.0, atol=1e-15)

        d_z = (probs - np.eye(3)[labels]) / len(labels)
        grads = backward(net, cache, labels)
        np.testing.assert_allclose(grads["1.b"], d_z.sum(axis=0), atol=1e-15)
        np.testing.assert_allclose(
            grads["1.W"], d_z.T @ cache.layers[1].h_in, atol=1e-15
        )
        # nothing flows back through zero weights
        assert not grads["0.W"].any()

    def test_gradients_scale_with_the_loss(self) -> None:
        """`loss_scale` multiplies every gradient."""
        net = default_net()
        x = np.random.default_rng(3).normal(size=(16, 12))
        labels = np.arange(16) % 3
        _, cache = forward(net, x, Mode.TRAIN, rng=np.random.default_rng(4))
        assert cache is not None
        base = backward(net, cache, labels)
        doubled = backward(net, cache, labels, loss_scale=2.0)
        scaled = backward(net, cache, labels, loss_scale=0.3)
        for key, grad in base.items():
            np.testing.assert_array_equal(doubled[key], 2.0 * grad)
            np.testing.assert_allclose(scaled[key], 0.3 * grad, rtol=1e-12, atol=1e-17)
