"""
Unit tests for dense networks.
"""

import unittest

import numpy as np

from advpose.errors import NoForwardRecordedError, NonFiniteError, ShapeMismatchError
from advpose.nn.dense import IDENTITY, RELU, SIGMOID, DenseNet, DenseNetSpec, backward, forward, sigmoid
from advpose.nn.gradcheck import grad_check, check_loss


class TestDenseNet(unittest.TestCase):
    """Test cases for DenseNet forward and backward passes."""

    def test_identity_layer(self):
        """Test that W = I, b = 0 reproduces the input."""
        net = DenseNet(DenseNetSpec(4, (4,), (IDENTITY,)))
        net.weights[0].value = np.eye(4)
        inputs = np.random.default_rng(0).standard_normal((3, 4))
        np.testing.assert_array_equal(forward(net, inputs), inputs)

    def test_relu_of_negative(self):
        """Test that negative pre-activations give zeros."""
        net = DenseNet(DenseNetSpec(2, (3,), (RELU,)))
        net.weights[0].value = np.ones((2, 3))
        net.biases[0].value = -10.0 * np.ones(3)
        np.testing.assert_array_equal(net.forward(np.ones((5, 2))), np.zeros((5, 3)))

    def test_matches_matrix_oracle(self):
        """Test a random net against explicit matrix products."""
        net = DenseNet(DenseNetSpec(5, (7, 4, 2), (RELU, SIGMOID, IDENTITY), seed=3))
        for tensor in net.biases:
            tensor.value = np.random.default_rng(1).standard_normal(tensor.shape)
        inputs = np.random.default_rng(2).standard_normal((6, 5))
        hidden = np.maximum(inputs @ net.weights[0].value + net.biases[0].value, 0.0)
        hidden = 1.0 / (1.0 + np.exp(-(hidden @ net.weights[1].value + net.biases[1].value)))
        expected = hidden @ net.weights[2].value + net.biases[2].value
        np.testing.assert_allclose(net.forward(inputs), expected, rtol=1e-12, atol=1e-14)

    def test_single_row(self):
        """Test that a 1-D input gives a 1-D output."""
        net = DenseNet(DenseNetSpec(3, (2,), (SIGMOID,)))
        output = net.forward(np.zeros(3))
        self.assertEqual(output.shape, (2,))
        np.testing.assert_allclose(output, [0.5, 0.5])
        self.assertEqual(net.backward(np.ones(2)).shape, (3,))

    def test_bias_gradient_of_linear_sum(self):
        """Test that d sum(output) / d bias is all ones per row."""
        net = DenseNet(DenseNetSpec(3, (4,), (IDENTITY,)))
        net.forward(np.random.default_rng(0).standard_normal((1, 3)))
        grads = backward(net, np.ones((1, 4)))
        np.testing.assert_array_equal(grads["net/0/b"], np.ones(4))

    def test_zero_upstream(self):
        """Test that a zero upstream gradient leaves all gradients zero."""
        net = DenseNet(DenseNetSpec(3, (5, 2), (RELU, SIGMOID)))
        net.forward(np.ones((2, 3)))
        net.backward(np.zeros((2, 2)))
        for tensor in net.parameters():
            self.assertFalse(np.any(tensor.grad))

    def test_backward_before_forward(self):
        """Test that backward needs a recorded forward pass."""
        net = DenseNet(DenseNetSpec(3, (2,), (IDENTITY,)))
        with self.assertRaises(NoForwardRecordedError):
            net.backward(np.ones(2))
        with self.assertRaises(NoForwardRecordedError):
            net.layer_output(0)

    def test_width_mismatch(self):
        """Test input width validation."""
        net = DenseNet(DenseNetSpec(3, (2,), (IDENTITY,)))
        with self.assertRaises(ShapeMismatchError):
            net.forward(np.ones((2, 4)))

    def test_non_finite_output(self):
        """Test that NaN inputs trip the finiteness check."""
        net = DenseNet(DenseNetSpec(2, (2,), (IDENTITY,)))
        with self.assertRaises(NonFiniteError):
            net.forward(np.array([[np.nan, 1.0]]))

    def test_invalid_spec(self):
        """Test spec validation."""
        with self.assertRaises(ValueError):
            DenseNet(DenseNetSpec(3, (), ()))
        with self.assertRaises(ValueError):
            DenseNet(DenseNetSpec(3, (2,), ("tanh",)))
        with self.assertRaises(ValueError):
            DenseNet(DenseNetSpec(3, (2, 0), (RELU, RELU)))

    def test_seeded_initialization(self):
        """Test that the seed fixes the weights and reset re-draws them."""
        spec = DenseNetSpec(4, (3,), (RELU,), seed=9)
        first, second = DenseNet(spec), DenseNet(spec)
        np.testing.assert_array_equal(first.weights[0].value, second.weights[0].value)
        bound = np.sqrt(6.0 / 7.0)
        self.assertTrue(np.all(np.abs(first.weights[0].value) <= bound))
        second.reset(10)
        self.assertFalse(np.array_equal(first.weights[0].value, second.weights[0].value))

    def test_taps_add_to_hidden_gradient(self):
        """Test that a tap equals backpropagating from the hidden layer."""
        net = DenseNet(DenseNetSpec(3, (4, 2), (SIGMOID, IDENTITY), seed=1))
        inputs = np.random.default_rng(5).standard_normal((2, 3))
        tap = np.random.default_rng(6).standard_normal((2, 4))
        net.forward(inputs)
        grad_input = net.backward(np.zeros((2, 2)), taps={0: tap})
        self.assertFalse(np.any(net.weights[1].grad))
        hidden = net.layer_output(0)
        expected = (tap * hidden * (1 - hidden)) @ net.weights[0].value.T
        np.testing.assert_allclose(grad_input, expected, rtol=1e-12)

    def test_state_dict_round_trip(self):
        """Test copying parameters between networks."""
        source = DenseNet(DenseNetSpec(3, (4, 2), (RELU, SIGMOID), seed=1), name="a")
        target = DenseNet(DenseNetSpec(3, (4, 2), (RELU, SIGMOID), seed=2), name="a")
        target.load_state_dict(source.state_dict())
        inputs = np.ones((1, 3))
        np.testing.assert_array_equal(target.forward(inputs), source.forward(inputs))
        with self.assertRaises(KeyError):
            DenseNet(DenseNetSpec(3, (4, 2), (RELU, SIGMOID)), name="b").load_state_dict(source.state_dict())

    def test_random_sigmoid_net_grad_check(self):
        """Test a 3-layer sigmoid net against central differences."""
        net = DenseNet(DenseNetSpec(4, (6, 5, 3), (SIGMOID, SIGMOID, SIGMOID), seed=4))
        inputs = np.random.default_rng(0).standard_normal((3, 4))
        self.assertLess(grad_check(net, inputs, check_loss((3, 3), seed=1)), 1e-6)

    def test_sigmoid_is_stable(self):
        """Test sigmoid at extreme inputs."""
        values = sigmoid(np.array([-1000.0, 0.0, 1000.0]))
        np.testing.assert_allclose(values, [0.0, 0.5, 1.0])
        self.assertTrue(np.all(np.isfinite(values)))


if __name__ == "__main__":
    unittest.main()
