"""
Adam optimizer.
"""

from dataclasses import dataclass, field

import numpy as np

from advpose.errors import ShapeMismatchError

DEFAULT_LR = 1e-3
DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.999
DEFAULT_EPSILON = 1e-8


@dataclass
class AdamState:
    """
    Moment accumulators and hyperparameters of one Adam optimizer.

    Attributes:
        first_moment, second_moment: One array per parameter
        step: Number of updates applied so far
    """

    first_moment: list = field(default_factory=list)
    second_moment: list = field(default_factory=list)
    step: int = 0
    lr: float = DEFAULT_LR
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    epsilon: float = DEFAULT_EPSILON


def adam_step(params, grads, state):
    """
    Apply one bias-corrected Adam update.

    Args:
        params: List of parameter arrays
        grads: List of gradient arrays shaped like `params`
        state: AdamState; moments are created on the first call

    Returns:
        List of updated parameter arrays (the state is advanced in place)

    Raises:
        ShapeMismatchError: If shapes disagree
    """
    if len(params) != len(grads):
        raise ShapeMismatchError(f"{len(params)} parameters but {len(grads)} gradients")
    if not state.first_moment:
        state.first_moment = [np.zeros_like(p, dtype=np.float64) for p in params]
        state.second_moment = [np.zeros_like(p, dtype=np.float64) for p in params]
    for param, grad, moment in zip(params, grads, state.first_moment):
        if np.shape(param) != np.shape(grad) or np.shape(param) != np.shape(moment):
            raise ShapeMismatchError(f"Parameter shape {np.shape(param)} vs gradient {np.shape(grad)}")

    state.step += 1
    correction1 = 1.0 - state.beta1 ** state.step
    correction2 = 1.0 - state.beta2 ** state.step
    updated = []
    for index, (param, grad) in enumerate(zip(params, grads)):
        m = state.beta1 * state.first_moment[index] + (1.0 - state.beta1) * grad
        v = state.beta2 * state.second_moment[index] + (1.0 - state.beta2) * grad * grad
        state.first_moment[index], state.second_moment[index] = m, v
        m_hat = m / correction1
        v_hat = v / correction2
        updated.append(param - state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon))
    return updated


class Adam:
    """Adam over a fixed list of Tensors, reading their accumulated gradients."""

    def __init__(self, tensors, lr=DEFAULT_LR, beta1=DEFAULT_BETA1, beta2=DEFAULT_BETA2,
                 epsilon=DEFAULT_EPSILON):
        self.tensors = list(tensors)
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, epsilon=epsilon)

    def step(self):
        for tensor in self.tensors:
            tensor.check_finite()
        values = adam_step([t.value for t in self.tensors], [t.grad for t in self.tensors], self.state)
        for tensor, value in zip(self.tensors, values):
            tensor.value = value

    def zero_grad(self):
        for tensor in self.tensors:
            tensor.zero_grad()

    def state_dict(self, prefix):
        """Checkpoint records for the moments and step counter."""
        records = {f"{prefix}/step": np.array([float(self.state.step)])}
        if self.state.first_moment:
            for tensor, m, v in zip(self.tensors, self.state.first_moment, self.state.second_moment):
                records[f"{prefix}/m/{tensor.name}"] = m
                records[f"{prefix}/v/{tensor.name}"] = v
        return records

    def load_state_dict(self, records, prefix):
        key = f"{prefix}/step"
        if key not in records:
            return
        self.state.step = int(records[key][0])
        first = [records.get(f"{prefix}/m/{t.name}") for t in self.tensors]
        second = [records.get(f"{prefix}/v/{t.name}") for t in self.tensors]
        if all(m is not None for m in first) and all(v is not None for v in second):
            self.state.first_moment = [np.array(m) for m in first]
            self.state.second_moment = [np.array(v) for v in second]
        else:
            self.state.first_moment, self.state.second_moment = [], []
