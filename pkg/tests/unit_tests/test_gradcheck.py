"""Unit tests for the finite-difference gradient check."""

import numpy as np
import pytest
from pytest_mock import MockerFixture

from mobility_stress.nn import (
    Activation,
    LayerSpec,
    Network,
    default_architecture,
    grad_check,
    gradient_errors,
)
from mobility_stress.nn import gradcheck as gradcheck_module

TOLERANCE = 1e-4


def random_architecture(rng: np.random.Generator) -> Network:
    in_dim = int(rng.integers(2, 9))
    depth = int(rng.integers(1, 4))
    layers = [
        LayerSpec(
            out_dim=int(rng.integers(2, 10)),
            dropout_rate=float(rng.choice([0.0, 0.2, 0.4])),
            batch_norm=bool(rng.integers(0, 2)),
        )
        for _ in range(depth)
    ]
    batch_norm = bool(rng.integers(0, 2))
    layers.append(
        LayerSpec(out_dim=3, activation=Activation.SOFTMAX, batch_norm=batch_norm)
    )
    return Network(in_dim, layers, seed=int(rng.integers(0, 1000)))


class TestGradCheck:
    """Test analytic gradients against central differences."""

    def test_default_architecture(self) -> None:
        """The 12-57-35-35-3 network passes with dropout and batch norm active."""
        rng = np.random.default_rng(0)
        net = Network(12, default_architecture(), seed=1)
        batch = rng.normal(size=(16, 12))
        labels = rng.integers(0, 3, size=16)
        assert grad_check(net, batch, labels, seed=2) <= TOLERANCE

    def test_random_architectures(self) -> None:
        """Nine more random stacks pass as well."""
        rng = np.random.default_rng(1)
        for _ in range(9):
            net = random_architecture(rng)
            batch = rng.normal(size=(int(rng.integers(4, 12)), net.in_dim))
            labels = rng.integers(0, 3, size=len(batch))
            errors = gradient_errors(net, batch, labels, seed=int(rng.integers(0, 100)))
            assert max(errors.values()) <= TOLERANCE, errors

    def test_bias_before_batch_norm_has_no_gradient(self) -> None:
        """The batch mean absorbs a pre-normalisation bias."""
        net = Network(5, default_architecture((6,), (0.0,)), seed=0)
        rng = np.random.default_rng(3)
        x, y = rng.normal(size=(8, 5)), rng.integers(0, 3, size=8)
        errors = gradient_errors(net, x, y)
        assert errors["0.b"] < 1e-12
        assert errors["1.b"] < 1e-12

    def test_running_statistics_untouched(self) -> None:
        """Checking gradients leaves the network's buffers alone."""
        net = Network(4, default_architecture((5,), (0.2,)), seed=0)
        before = net.state_dict()
        rng = np.random.default_rng(4)
        grad_check(net, rng.normal(size=(6, 4)), rng.integers(0, 3, size=6))
        for key, value in net.state_dict().items():
            np.testing.assert_array_equal(value, before[key])

    def test_detects_a_wrong_gradient(self, mocker: MockerFixture) -> None:
        """A backward pass that is off by 10% fails the check."""
        real_backward = gradcheck_module.backward

        def skewed(*args, **kwargs):
            return {k: 1.1 * g for k, g in real_backward(*args, **kwargs).items()}

        mocker.patch.object(gradcheck_module, "backward", side_effect=skewed)
        net = Network(4, default_architecture((5,), (0.0,)), seed=0)
        rng = np.random.default_rng(5)
        x, y = rng.normal(size=(6, 4)), rng.integers(0, 3, size=6)
        assert grad_check(net, x, y) > 0.05

    def test_detects_a_wrong_small_element(self, mocker: MockerFixture) -> None:
        """One tiny entry off by 2x fails although the array norm barely moves."""
        real_backward = gradcheck_module.backward

        def one_bad_entry(*args, **kwargs):
            grads = real_backward(*args, **kwargs)
            w = grads["1.W"]
            magnitude = np.where(w != 0, np.abs(w), np.inf)
            w[np.unravel_index(np.argmin(magnitude), w.shape)] *= 2.0
            return grads

        mocker.patch.object(gradcheck_module, "backward", side_effect=one_bad_entry)
        net = Network(4, default_architecture((5,), (0.0,)), seed=0)
        rng = np.random.default_rng(5)
        x, y = rng.normal(size=(6, 4)), rng.integers(0, 3, size=6)
        errors = gradient_errors(net, x, y)
        assert errors["1.W"] > 0.4
        assert errors["0.W"] <= TOLERANCE

    def test_step_must_be_positive(self) -> None:
        """A zero step is meaningless."""
        net = Network(4, default_architecture((5,), (0.0,)))
        with pytest.raises(ValueError, match="h must be positive"):
            gradient_errors(net, np.zeros((4, 4)), np.zeros(4, dtype=int), h=0.0)
