"""
Unit tests for loss functions and the Adam optimizer.
"""

import unittest

import numpy as np

from advpose.errors import NonFiniteError, ShapeMismatchError
from advpose.nn.losses import BCE_EPSILON, bce, bce_grad, squared_error
from advpose.nn.optim import Adam, AdamState, adam_step
from advpose.nn.tensor import Tensor


class TestLosses(unittest.TestCase):
    """Test cases for binary cross-entropy and squared error."""

    def test_bce_at_half(self):
        """Test bce(0.5, 1) = ln 2."""
        self.assertAlmostEqual(float(bce(0.5, 1)), np.log(2.0), places=12)
        self.assertAlmostEqual(float(bce(0.5, 0)), np.log(2.0), places=12)

    def test_bce_confident_wrong(self):
        """Test bce(0.9, 0) = -ln 0.1."""
        self.assertAlmostEqual(float(bce(0.9, 0)), -np.log(0.1), places=12)

    def test_bce_is_clamped(self):
        """Test finite loss at 0 and 1."""
        self.assertAlmostEqual(float(bce(0.0, 1)), -np.log(BCE_EPSILON), places=9)
        self.assertTrue(np.isfinite(bce(1.0, 0)))

    def test_bce_grad(self):
        """Test the derivative against central differences."""
        for y_hat in (0.2, 0.5, 0.83):
            for y in (0, 1):
                eps = 1e-7
                numeric = (bce(y_hat + eps, y) - bce(y_hat - eps, y)) / (2 * eps)
                self.assertAlmostEqual(float(bce_grad(y_hat, y)), float(numeric), places=5)

    def test_bce_grad_through_sigmoid(self):
        """Test that bce'(s)·s(1−s) = s − y."""
        s = 0.3
        self.assertAlmostEqual(float(bce_grad(s, 1) * s * (1 - s)), s - 1, places=12)

    def test_squared_error(self):
        """Test the sum of squares and its gradient."""
        loss, grad = squared_error([1.0, 2.0], [0.0, 4.0])
        self.assertEqual(loss, 5.0)
        np.testing.assert_array_equal(grad, [2.0, -4.0])


class TestAdam(unittest.TestCase):
    """Test cases for adam_step and Adam."""

    def test_first_step_moves_by_learning_rate(self):
        """Test that bias correction makes the first step ±lr."""
        state = AdamState(lr=0.1)
        updated = adam_step([np.array([1.0, -2.0])], [np.array([3.0, -0.5])], state)
        np.testing.assert_allclose(updated[0], [0.9, -1.9], atol=1e-7)
        self.assertEqual(state.step, 1)

    def test_step_count_is_monotone(self):
        """Test that the step counter advances once per update."""
        tensor = Tensor("w", [0.0])
        optimizer = Adam([tensor], lr=0.01)
        for expected in range(1, 4):
            tensor.grad[:] = 1.0
            optimizer.step()
            self.assertEqual(optimizer.state.step, expected)

    def test_minimizes_quadratic(self):
        """Test convergence on a convex quadratic."""
        tensor = Tensor("w", [5.0, -3.0])
        optimizer = Adam([tensor], lr=0.1)
        for _ in range(1000):
            optimizer.zero_grad()
            _, grad = squared_error(tensor.value, [1.0, 2.0])
            tensor.grad += grad
            optimizer.step()
        np.testing.assert_allclose(tensor.value, [1.0, 2.0], atol=0.05)

    def test_shape_mismatch(self):
        """Test gradient shape validation."""
        with self.assertRaises(ShapeMismatchError):
            adam_step([np.zeros(2)], [np.zeros(3)], AdamState())
        with self.assertRaises(ShapeMismatchError):
            adam_step([np.zeros(2)], [], AdamState())

    def test_non_finite_gradient(self):
        """Test that NaN gradients are refused."""
        tensor = Tensor("w", [0.0])
        tensor.grad[0] = np.nan
        with self.assertRaises(NonFiniteError):
            Adam([tensor]).step()

    def test_state_dict_round_trip(self):
        """Test that restored moments continue the same trajectory."""
        first = Tensor("w", [1.0, 2.0])
        optimizer = Adam([first], lr=0.05)
        for _ in range(3):
            first.grad[:] = [0.5, -1.0]
            optimizer.step()
        records = optimizer.state_dict("opt")
        second = Tensor("w", first.value.copy())
        restored = Adam([second], lr=0.05)
        restored.load_state_dict(records, "opt")
        self.assertEqual(restored.state.step, 3)
        first.grad[:] = second.grad[:] = [0.2, 0.3]
        optimizer.step()
        restored.step()
        np.testing.assert_array_equal(first.value, second.value)

    def test_load_without_records(self):
        """Test that missing records leave a fresh optimizer."""
        optimizer = Adam([Tensor("w", [0.0])])
        optimizer.load_state_dict({}, "opt")
        self.assertEqual(optimizer.state.step, 0)


if __name__ == "__main__":
    unittest.main()
