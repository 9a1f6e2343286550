"""Unit tests for the Adam update."""

import math

import numpy as np
import pytest

from mobility_stress.nn import AdamState, adam_step


def reference_adam(
    theta: list, steps: int, lr: float, b1: float, b2: float, eps: float
) -> list:
    """Scalar-by-scalar Adam descending 0.5 * ||theta||², whose gradient is theta."""
    theta = list(theta)
    m = [0.0] * len(theta)
    v = [0.0] * len(theta)
    for t in range(1, steps + 1):
        for i, gi in enumerate(list(theta)):
            m[i] = b1 * m[i] + (1 - b1) * gi
            v[i] = b2 * v[i] + (1 - b2) * gi * gi
            m_hat = m[i] / (1 - b1**t)
            v_hat = v[i] / (1 - b2**t)
            theta[i] -= lr * m_hat / (math.sqrt(v_hat) + eps)
    return theta


class TestAdam:
    """Test bias-corrected moment updates."""

    def test_first_step_moves_by_learning_rate(self) -> None:
        """After one step m_hat/sqrt(v_hat) is the gradient's sign."""
        params = {"w": np.array([1.0])}
        adam_step(AdamState(learning_rate=0.1), params, {"w": np.array([2.5])})
        assert params["w"][0] == pytest.approx(0.9, abs=1e-8)

    def test_matches_reference_for_100_steps(self) -> None:
        """Vectorised updates follow the scalar trajectory on 0.5 * ||theta||²."""
        theta0 = np.random.default_rng(0).normal(size=6)
        params = {"w": theta0.copy()}
        state = AdamState(learning_rate=0.01, beta1=0.8, beta2=0.99, epsilon=1e-7)
        for _ in range(100):
            adam_step(state, params, {"w": params["w"].copy()})
        expected = reference_adam(theta0.tolist(), 100, 0.01, 0.8, 0.99, 1e-7)
        np.testing.assert_allclose(params["w"], expected, rtol=0, atol=1e-12)
        assert state.t == 100

    def test_updates_in_place(self) -> None:
        """The caller's arrays are the ones updated."""
        w = np.zeros(3)
        params = {"w": w}
        returned, _ = adam_step(AdamState(), params, {"w": np.ones(3)})
        assert returned["w"] is w
        assert np.all(w < 0)

    def test_minimises_a_quadratic(self) -> None:
        """Gradient steps on ||w - c||² approach c."""
        c = np.array([3.0, -2.0])
        params = {"w": np.zeros(2)}
        state = AdamState(learning_rate=0.05)
        for _ in range(2000):
            adam_step(state, params, {"w": 2 * (params["w"] - c)})
        np.testing.assert_allclose(params["w"], c, atol=1e-3)

    def test_key_and_shape_checks(self) -> None:
        """Gradients must line up with parameters."""
        with pytest.raises(ValueError, match="same keys"):
            adam_step(AdamState(), {"w": np.zeros(2)}, {"v": np.zeros(2)})
        with pytest.raises(ValueError, match="shape"):
            adam_step(AdamState(), {"w": np.zeros(2)}, {"w": np.zeros(3)})

    @pytest.mark.parametrize(
        "kwargs",
        [{"learning_rate": 0.0}, {"beta1": 1.0}, {"beta2": -0.1}, {"epsilon": 0.0}],
    )
    def test_hyperparameter_ranges(self, kwargs: dict) -> None:
        """Out-of-range settings are rejected up front."""
        with pytest.raises(ValueError):
            AdamState(**kwargs)
