"""
Dense networks with analytic backpropagation.

Inputs are batched row-wise: a (B, in) array produces a (B, out) array. Each
layer computes act(x·W + b). forward() records what backward() needs;
backward() accumulates parameter gradients and returns the input gradient.
"""

from dataclasses import dataclass

import numpy as np

from advpose.errors import NoForwardRecordedError, ShapeMismatchError
from advpose.nn.tensor import Tensor, check_finite

IDENTITY = "identity"
RELU = "relu"
SIGMOID = "sigmoid"
ACTIVATIONS = (IDENTITY, RELU, SIGMOID)


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def _activate(name, z):
    if name == RELU:
        return np.maximum(z, 0.0)
    if name == SIGMOID:
        return sigmoid(z)
    return z


def _activation_grad(name, z, out, grad):
    if name == RELU:
        return grad * (z > 0)
    if name == SIGMOID:
        return grad * out * (1.0 - out)
    return grad


@dataclass(frozen=True)
class DenseNetSpec:
    """
    Architecture of a dense network.

    Attributes:
        input_width: Width of the input rows
        widths: Output width of every layer
        activations: Activation of every layer (identity, relu or sigmoid)
        seed: Initialization seed
    """

    input_width: int
    widths: tuple
    activations: tuple
    seed: int = 0

    def validate(self):
        """Return a list of violated invariants (empty when valid)."""
        problems = []
        if not self.widths:
            problems.append("network needs at least one layer")
        if len(self.widths) != len(self.activations):
            problems.append("one activation per layer is required")
        if self.input_width <= 0 or any(w <= 0 for w in self.widths):
            problems.append("layer widths must be positive")
        problems.extend(f"unknown activation '{a}'" for a in self.activations if a not in ACTIVATIONS)
        return problems


class DenseNet:
    """
    A stack of dense layers.

    Weights start uniform in ±√(6/(fan_in+fan_out)) from the spec seed,
    biases at zero.
    """

    def __init__(self, spec, name="net"):
        problems = spec.validate()
        if problems:
            raise ValueError(f"Invalid network spec: {'; '.join(problems)}")
        self.spec = spec
        self.name = name
        self.weights = []
        self.biases = []
        self.reset(spec.seed)
        self._record = None

    def reset(self, seed):
        """Re-draw every parameter from `seed`."""
        rng = np.random.default_rng(seed)
        self.weights, self.biases = [], []
        fan_in = self.spec.input_width
        for index, fan_out in enumerate(self.spec.widths):
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            self.weights.append(Tensor(f"{self.name}/{index}/W", rng.uniform(-bound, bound, (fan_in, fan_out))))
            self.biases.append(Tensor(f"{self.name}/{index}/b", np.zeros(fan_out)))
            fan_in = fan_out
        self._record = None

    @property
    def input_width(self):
        return self.spec.input_width

    @property
    def output_width(self):
        return self.spec.widths[-1]

    @property
    def depth(self):
        return len(self.spec.widths)

    def parameters(self):
        params = []
        for weight, bias in zip(self.weights, self.biases):
            params.extend((weight, bias))
        return params

    def zero_grad(self):
        for tensor in self.parameters():
            tensor.zero_grad()

    def forward(self, inputs):
        """
        Run the network.

        Args:
            inputs: (B, input_width) or (input_width,) array

        Returns:
            (B, output_width) array, or (output_width,) for a single row

        Raises:
            ShapeMismatchError: If the input width is wrong
            NonFiniteError: If an output is NaN/Inf
        """
        x = np.asarray(inputs, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None]
        if x.ndim != 2 or x.shape[1] != self.input_width:
            raise ShapeMismatchError(f"{self.name} expects width {self.input_width}, got shape {np.shape(inputs)}")

        layer_inputs, pre_activations, outputs = [], [], []
        for weight, bias, activation in zip(self.weights, self.biases, self.spec.activations):
            layer_inputs.append(x)
            z = x @ weight.value + bias.value
            x = _activate(activation, z)
            pre_activations.append(z)
            outputs.append(x)
        check_finite(x, f"{self.name} output")
        self._record = (single, layer_inputs, pre_activations, outputs)
        return x[0] if single else x

    def layer_output(self, index):
        """Post-activation output of layer `index` from the last forward()."""
        if self._record is None:
            raise NoForwardRecordedError(f"{self.name}: no forward pass recorded")
        single, _, _, outputs = self._record
        return outputs[index][0] if single else outputs[index]

    def backward(self, upstream, taps=None):
        """
        Backpropagate the gradient of a scalar loss.

        Args:
            upstream: Gradient w.r.t. the last forward() output
            taps: Optional {layer index: gradient} added to the gradient
                w.r.t. that layer's post-activation output

        Returns:
            Gradient w.r.t. the forward() input (same shape as it)

        Raises:
            NoForwardRecordedError: If forward() has not been called
        """
        if self._record is None:
            raise NoForwardRecordedError(f"{self.name}: backward() called before forward()")
        single, layer_inputs, pre_activations, outputs = self._record
        taps = taps or {}

        grad = np.asarray(upstream, dtype=np.float64)
        if single:
            grad = grad[None]
        for index in reversed(range(self.depth)):
            if index in taps:
                tap = np.asarray(taps[index], dtype=np.float64)
                grad = grad + (tap[None] if single else tap)
            grad = _activation_grad(self.spec.activations[index], pre_activations[index], outputs[index], grad)
            self.weights[index].grad += layer_inputs[index].T @ grad
            self.biases[index].grad += grad.sum(axis=0)
            grad = grad @ self.weights[index].value.T
        check_finite(grad, f"{self.name} input gradient")
        return grad[0] if single else grad

    def state_dict(self):
        return {tensor.name: tensor.value for tensor in self.parameters()}

    def load_state_dict(self, state):
        """Copy values for every parameter from `state` (keyed by tensor name)."""
        for tensor in self.parameters():
            if tensor.name not in state:
                raise KeyError(f"Missing parameter '{tensor.name}'")
            value = np.asarray(state[tensor.name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise ShapeMismatchError(f"'{tensor.name}' expects {tensor.shape}, got {value.shape}")
            tensor.value = value.copy()
            tensor.grad = np.zeros_like(tensor.value)
        self._record = None


def forward(net, inputs):
    """Functional alias of DenseNet.forward."""
    return net.forward(inputs)


def backward(net, upstream_grad):
    """
    Functional alias of DenseNet.backward.

    Returns:
        Dict of parameter name -> gradient accumulated by this call
    """
    before = {tensor.name: tensor.grad.copy() for tensor in net.parameters()}
    net.backward(upstream_grad)
    return {tensor.name: tensor.grad - before[tensor.name] for tensor in net.parameters()}
