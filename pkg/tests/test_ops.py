"""Forward values and finite-difference gradient checks for the layer ops."""

import numpy as np
import pytest

from phonemap.nn import (
    affine,
    affine_backward,
    conv1d,
    conv1d_backward,
    grad_check,
    gumbel_softmax,
    gumbel_softmax_backward,
    leaky_relu,
    leaky_relu_backward,
    max_relative_error,
    new_rng,
    numerical_gradient,
    softmax,
    softmax_backward,
)


class TestSoftmax:
    def test_uniform_logits(self):
        """Equal logits give the uniform distribution."""
        np.testing.assert_allclose(softmax(np.zeros(3)), np.full(3, 1.0 / 3.0), rtol=0, atol=1e-15)

    def test_closed_form_two_way(self):
        """softmax([ln 2, 0]) = [2/3, 1/3]."""
        out = softmax(np.array([np.log(2.0), 0.0]))
        np.testing.assert_allclose(out, [2.0 / 3.0, 1.0 / 3.0], rtol=1e-14)

    def test_shift_invariance(self):
        rng = new_rng(0)
        v = rng.normal(size=7)
        np.testing.assert_allclose(softmax(v), softmax(v + 5.0), rtol=0, atol=1e-14)

    def test_simplex_point(self):
        """Outputs are nonnegative and sum to 1 within 1e-12, even for extreme logits."""
        rng = new_rng(1)
        for _ in range(20):
            v = rng.normal(scale=200.0, size=rng.integers(2, 12))
            p = softmax(v)
            assert np.all(p >= 0.0)
            assert abs(p.sum() - 1.0) <= 1e-12

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError, match="non-finite"):
            softmax(np.array([0.0, np.nan]))

    def test_backward_matches_finite_differences(self):
        rng = new_rng(2)
        for _ in range(5):
            logits = rng.normal(size=6)
            w = rng.normal(size=6)  # fixed projection makes the loss scalar

            def loss(v):
                return float(w @ softmax(v))

            analytic = softmax_backward(w, softmax(logits))
            numeric = numerical_gradient(loss, logits)
            assert max_relative_error(analytic, numeric) <= 1e-6

    def test_cross_entropy_gradient(self):
        """softmax + cross-entropy gradient checks to 1e-6."""
        rng = new_rng(3)
        logits = rng.normal(size=8)
        target = 5

        def loss(v):
            return float(-np.log(softmax(v)[target]))

        p = softmax(logits)
        ghat = np.zeros(8)
        ghat[target] = -1.0 / p[target]
        analytic = softmax_backward(ghat, p)
        # the classic closed form p - onehot(target) is the independent oracle
        expected = p.copy()
        expected[target] -= 1.0
        np.testing.assert_allclose(analytic, expected, rtol=1e-12)
        assert max_relative_error(analytic, numerical_gradient(loss, logits)) <= 1e-6


class TestGumbelSoftmax:
    def test_hard_is_one_hot(self):
        rng = new_rng(10)
        for _ in range(50):
            logits = rng.normal(size=rng.integers(2, 9))
            soft, hard = gumbel_softmax(logits, 0.9, rng)
            assert hard.sum() == 1.0
            assert np.count_nonzero(hard == 1.0) == 1
            assert hard[np.argmax(soft)] == 1.0
            assert abs(soft.sum() - 1.0) <= 1e-12

    def test_dominant_logit_wins(self):
        """With logits [10, -10] the hard sample picks index 0 in >= 99% of draws."""
        rng = new_rng(11)
        logits = np.array([10.0, -10.0])
        wins = 0
        for _ in range(10_000):
            _, hard = gumbel_softmax(logits, 0.9, rng)
            wins += int(hard[0] == 1.0)
        assert wins >= 9_900

    def test_argmax_distribution_matches_softmax(self):
        """P(hard picks i) equals softmax(logits)_i regardless of inverse temperature."""
        rng = new_rng(12)
        logits = np.array([1.0, 0.0, -0.5])
        expected = softmax(logits)
        n = 20_000
        for inv_temp in (0.9, 3.0):
            counts = np.zeros(3)
            for _ in range(n):
                _, hard = gumbel_softmax(logits, inv_temp, rng)
                counts += hard
            freq = counts / n
            # 4 sigma of a binomial proportion at n=20000
            sigma = np.sqrt(expected * (1.0 - expected) / n)
            assert np.all(np.abs(freq - expected) <= 4.0 * sigma)

    def test_rejects_non_positive_inv_temp(self):
        rng = new_rng(13)
        with pytest.raises(ValueError, match="inv_temp"):
            gumbel_softmax(np.zeros(3), 0.0, rng)
        with pytest.raises(ValueError, match="inv_temp"):
            gumbel_softmax(np.zeros(3), -1.0, rng)

    def test_straight_through_backward(self):
        """The backward pass is the gradient of the soft sample at fixed noise."""
        rng = new_rng(14)
        logits = rng.normal(size=5)
        inv_temp = 0.9
        # freeze the gumbel noise by replaying the generator state
        state = rng.bit_generator.state
        soft, _ = gumbel_softmax(logits, inv_temp, rng)
        w = rng.normal(size=5)

        def soft_loss(v):
            replay = new_rng(0)
            replay.bit_generator.state = state
            s, _ = gumbel_softmax(v, inv_temp, replay)
            return float(w @ s)

        analytic = gumbel_softmax_backward(w, soft, inv_temp)
        numeric = numerical_gradient(soft_loss, logits)
        assert max_relative_error(analytic, numeric) <= 1e-6


class TestLeakyRelu:
    def test_positive_identity(self):
        assert leaky_relu(np.array(2.0), 0.01) == 2.0

    def test_negative_scaled(self):
        np.testing.assert_allclose(leaky_relu(np.array(-1.0), 0.01), -0.01, rtol=1e-15)

    def test_slope_validated(self):
        for bad in (0.0, 1.0, -0.5, 2.0):
            with pytest.raises(ValueError, match="slope"):
                leaky_relu(np.zeros(2), bad)

    def test_gradient_at_negative_input(self):
        """Gradient at x=-1 is the slope, matching finite differences to 1e-6."""
        slope = 0.01
        x = np.array([-1.0])
        analytic = leaky_relu_backward(np.ones(1), x, slope)
        numeric = numerical_gradient(lambda v: float(leaky_relu(v, slope).sum()), x)
        np.testing.assert_allclose(analytic, [slope], rtol=1e-12)
        assert np.abs(analytic - numeric).max() <= 1e-6

    def test_backward_matches_finite_differences(self):
        rng = new_rng(20)
        for _ in range(5):
            # keep inputs away from the kink at 0 where FD is ill-posed
            x = rng.normal(size=(3, 4))
            x = np.where(np.abs(x) < 0.05, 0.1, x)
            w = rng.normal(size=(3, 4))
            analytic = leaky_relu_backward(w, x, 0.2)
            numeric = numerical_gradient(lambda v: float((w * leaky_relu(v, 0.2)).sum()), x)
            assert max_relative_error(analytic, numeric) <= 1e-6


class TestAffine:
    def test_forward(self):
        x = np.array([[1.0, 2.0]])
        weight = np.array([[1.0, 0.0, -1.0], [0.0, 1.0, 1.0]])
        bias = np.array([0.5, 0.5, 0.5])
        np.testing.assert_allclose(affine(x, weight, bias), [[1.5, 2.5, 1.5]])

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            affine(np.zeros((2, 3)), np.zeros((4, 5)))

    def test_backward_matches_finite_differences(self):
        rng = new_rng(21)
        x = rng.normal(size=(4, 3))
        weight = rng.normal(size=(3, 5))
        bias = rng.normal(size=5)
        w = rng.normal(size=(4, 5))

        dx, dweight, dbias = affine_backward(w, x, weight)
        nx = numerical_gradient(lambda v: float((w * affine(v, weight, bias)).sum()), x)
        nweight = numerical_gradient(lambda v: float((w * affine(x, v, bias)).sum()), weight)
        nbias = numerical_gradient(lambda v: float((w * affine(x, weight, v)).sum()), bias)
        assert max_relative_error(dx, nx) <= 1e-6
        assert max_relative_error(dweight, nweight) <= 1e-6
        assert max_relative_error(dbias, nbias) <= 1e-6


class TestConv1d:
    def test_hand_convolution_valid(self):
        """x=[1,2,3] cross-correlated with [1,0,-1] under valid padding gives [-2]."""
        x = np.array([[1.0], [2.0], [3.0]])
        k = np.array([1.0, 0.0, -1.0]).reshape(3, 1, 1)
        np.testing.assert_allclose(conv1d(x, k, padding="valid"), [[-2.0]])

    def test_identity_kernel_same(self):
        rng = new_rng(30)
        x = rng.normal(size=(6, 1))
        k = np.array([0.0, 1.0, 0.0]).reshape(3, 1, 1)
        np.testing.assert_allclose(conv1d(x, k, padding="same"), x, rtol=1e-15)

    def test_same_preserves_length(self):
        rng = new_rng(31)
        x = rng.normal(size=(2, 9, 3))
        k = rng.normal(size=(5, 3, 4))
        assert conv1d(x, k, padding="same").shape == (2, 9, 4)

    def test_valid_output_length(self):
        rng = new_rng(32)
        x = rng.normal(size=(7, 2))
        k = rng.normal(size=(3, 2, 4))
        assert conv1d(x, k, padding="valid").shape == (5, 4)

    def test_same_requires_odd_width(self):
        with pytest.raises(ValueError, match="odd"):
            conv1d(np.zeros((5, 1)), np.zeros((4, 1, 1)), padding="same")

    def test_valid_requires_long_enough_input(self):
        with pytest.raises(ValueError, match="T >= width"):
            conv1d(np.zeros((2, 1)), np.zeros((3, 1, 1)), padding="valid")

    def test_channel_mismatch_reports_shapes(self):
        with pytest.raises(ValueError, match="channel mismatch"):
            conv1d(np.zeros((5, 2)), np.zeros((3, 3, 1)))

    def test_same_equals_valid_on_zero_padded_input(self):
        """'same' output equals 'valid' output of the explicitly zero-padded input."""
        rng = new_rng(33)
        x = rng.normal(size=(8, 2))
        k = rng.normal(size=(5, 2, 3))
        xp = np.pad(x, ((2, 2), (0, 0)))
        np.testing.assert_allclose(
            conv1d(x, k, padding="same"), conv1d(xp, k, padding="valid"), rtol=1e-12
        )

    @pytest.mark.parametrize("padding", ["same", "valid"])
    def test_backward_matches_finite_differences(self, padding):
        rng = new_rng(34)
        for _ in range(3):
            x = rng.normal(size=(2, 7, 3))
            k = rng.normal(size=(3, 3, 4))
            bias = rng.normal(size=4)
            w = rng.normal(size=conv1d(x, k, padding=padding, bias=bias).shape)

            dx, dk, dbias = conv1d_backward(w, x, k, padding=padding)
            nx = numerical_gradient(
                lambda v: float((w * conv1d(v, k, padding=padding, bias=bias)).sum()), x
            )
            nk = numerical_gradient(
                lambda v: float((w * conv1d(x, v, padding=padding, bias=bias)).sum()), k
            )
            nbias = numerical_gradient(
                lambda v: float((w * conv1d(x, k, padding=padding, bias=v)).sum()), bias
            )
            assert max_relative_error(dx, nx) <= 1e-4
            assert max_relative_error(dk, nk) <= 1e-4
            assert max_relative_error(dbias, nbias) <= 1e-4


class TestGradCheckHarness:
    def test_polynomial(self):
        """f(x)=x^2 at x=3: analytic 6 vs central difference, error <= 1e-8."""
        err = grad_check(
            lambda v: float(v[0] ** 2),
            lambda v: np.array([2.0 * v[0]]),
            np.array([3.0]),
        )
        assert err <= 1e-8

    def test_reports_wrong_gradient(self):
        err = grad_check(
            lambda v: float(v[0] ** 2),
            lambda v: np.array([3.0 * v[0]]),  # deliberately wrong
            np.array([3.0]),
        )
        assert err > 1e-2
