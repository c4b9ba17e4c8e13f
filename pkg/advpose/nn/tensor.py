"""
Named parameter tensors.
"""

import numpy as np

from advpose.errors import NonFiniteError


class Tensor:
    """
    A named 64-bit array with a same-shape gradient accumulator.

    Attributes:
        name: Record name used in checkpoints
        value: Parameter values
        grad: Accumulated gradient
    """

    def __init__(self, name, value):
        self.name = name
        self.value = np.array(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)

    @property
    def shape(self):
        return self.value.shape

    def zero_grad(self):
        self.grad.fill(0.0)

    def check_finite(self):
        """Raise NonFiniteError if the value or gradient holds NaN/Inf."""
        if not np.all(np.isfinite(self.value)):
            raise NonFiniteError(f"Parameter '{self.name}' has non-finite values")
        if not np.all(np.isfinite(self.grad)):
            raise NonFiniteError(f"Parameter '{self.name}' has non-finite gradients")

    def __repr__(self):
        return f"Tensor({self.name!r}, shape={self.shape})"


def check_finite(array, label):
    """Raise NonFiniteError if `array` holds NaN/Inf."""
    if not np.all(np.isfinite(array)):
        raise NonFiniteError(f"{label} contains non-finite values")
    return array
