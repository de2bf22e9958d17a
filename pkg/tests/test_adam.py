"""Adam optimizer: first-step formula, fixed points, and a trajectory oracle."""

import numpy as np
import pytest

from phonemap.nn import AdamOptimizer, AdamState, Parameter, adam_update, new_rng


def reference_adam(value, grads, lr, beta1=0.9, beta2=0.999, epsilon=1e-8):
    """Textbook bias-corrected Adam, re-derived independently of the module."""
    value = value.copy()
    m = np.zeros_like(value)
    v = np.zeros_like(value)
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        value = value - lr * m_hat / (np.sqrt(v_hat) + epsilon)
    return value


class TestAdamUpdate:
    def test_first_step_magnitude(self):
        """First step with constant grad g moves by lr*|g|/(|g|+eps), about lr."""
        for g in (3.0, -0.25, 1e-6):
            param = Parameter(np.array([1.0]))
            param.grad[:] = g
            state = AdamState.for_parameter(param)
            adam_update(param, state, lr=0.01)
            delta = abs(param.value[0] - 1.0)
            expected = 0.01 * abs(g) / (abs(g) + 1e-8)
            np.testing.assert_allclose(delta, expected, rtol=1e-12)

    def test_zero_grad_fixed_point(self):
        """Zero gradient leaves the value unchanged but still advances t."""
        param = Parameter(np.array([2.0, -3.0]))
        state = AdamState.for_parameter(param)
        for _ in range(5):
            adam_update(param, state, lr=0.1)
        np.testing.assert_array_equal(param.value, [2.0, -3.0])
        assert state.t == 5

    def test_t_strictly_increases(self):
        param = Parameter(np.zeros(2))
        state = AdamState.for_parameter(param)
        seen = []
        for _ in range(4):
            param.grad[:] = 1.0
            adam_update(param, state, lr=0.01)
            seen.append(state.t)
        assert seen == [1, 2, 3, 4]

    def test_non_finite_grad_rejected(self):
        param = Parameter(np.zeros(2))
        state = AdamState.for_parameter(param)
        param.grad[:] = [1.0, np.inf]
        with pytest.raises(FloatingPointError, match="non-finite"):
            adam_update(param, state, lr=0.01)

    def test_defaults(self):
        state = AdamState.for_parameter(Parameter(np.zeros(1)))
        assert state.beta1 == 0.9
        assert state.beta2 == 0.999
        assert state.epsilon == 1e-8

    def test_matches_reference_trajectory(self):
        """Ten steps against an independent reference implementation."""
        rng = new_rng(50)
        init = rng.normal(size=(3, 2))
        grads = [rng.normal(size=(3, 2)) for _ in range(10)]

        param = Parameter(init.copy())
        state = AdamState.for_parameter(param)
        for g in grads:
            param.grad[:] = g
            adam_update(param, state, lr=0.05)

        np.testing.assert_allclose(param.value, reference_adam(init, grads, lr=0.05), rtol=1e-12)

    def test_converges_on_quadratic(self):
        """Minimizing (x-4)^2 lands near 4."""
        param = Parameter(np.array([0.0]))
        state = AdamState.for_parameter(param)
        for _ in range(2_000):
            param.grad[:] = 2.0 * (param.value - 4.0)
            adam_update(param, state, lr=0.05)
        np.testing.assert_allclose(param.value, [4.0], atol=1e-3)


class TestAdamOptimizer:
    def test_step_updates_all_parameters(self):
        p1 = Parameter(np.zeros(2))
        p2 = Parameter(np.zeros(3))
        opt = AdamOptimizer([p1, p2], lr=0.01)
        p1.grad[:] = 1.0
        p2.grad[:] = -1.0
        opt.step()
        assert np.all(p1.value < 0.0)
        assert np.all(p2.value > 0.0)

    def test_zero_grads(self):
        p = Parameter(np.zeros(2))
        opt = AdamOptimizer([p], lr=0.01)
        p.grad[:] = 7.0
        opt.zero_grads()
        np.testing.assert_array_equal(p.grad, 0.0)

    def test_grad_shape_tracks_value(self):
        p = Parameter(np.zeros((2, 3)))
        assert p.grad.shape == (2, 3)
        np.testing.assert_array_equal(p.grad, 0.0)
