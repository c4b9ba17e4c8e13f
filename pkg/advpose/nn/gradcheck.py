"""
Central finite-difference gradient checking.

The relative error of one parameter tensor is ‖a − n‖ / (‖a‖ + ‖n‖) with a the
analytic and n the numerical gradient; a check reports the maximum over all
tensors.
"""

import logging

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_EPS = 1e-4
PASS_THRESHOLD = 1e-6
_TINY = 1e-30


def relative_error(analytic, numeric):
    """Norm-based relative error between two gradient arrays."""
    denominator = np.linalg.norm(analytic) + np.linalg.norm(numeric)
    if denominator < _TINY:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / denominator)


def check_gradients(tensors, evaluate, eps=DEFAULT_EPS):
    """
    Compare analytic and numerical gradients for arbitrary models.

    Args:
        tensors: Tensors to check
        evaluate: Callable(with_grad) -> scalar loss; when `with_grad` is
            True it must leave d loss / d tensor in every tensor.grad
            (starting from zero)
        eps: Finite-difference step

    Returns:
        Dict tensor name -> relative error
    """
    for tensor in tensors:
        tensor.zero_grad()
    evaluate(True)
    analytic = {tensor.name: tensor.grad.copy() for tensor in tensors}

    errors = {}
    for tensor in tensors:
        numeric = np.zeros_like(tensor.value)
        flat_value = tensor.value.reshape(-1)
        flat_numeric = numeric.reshape(-1)
        for index in range(flat_value.size):
            original = flat_value[index]
            flat_value[index] = original + eps
            plus = evaluate(False)
            flat_value[index] = original - eps
            minus = evaluate(False)
            flat_value[index] = original
            flat_numeric[index] = (plus - minus) / (2.0 * eps)
        errors[tensor.name] = relative_error(analytic[tensor.name], numeric)
        logger.debug("gradcheck %s: %.3e", tensor.name, errors[tensor.name])
    return errors


def grad_check(net, inputs, loss_fn, eps=DEFAULT_EPS):
    """
    Gradient-check every parameter of a DenseNet.

    Args:
        net: DenseNet
        inputs: Input batch
        loss_fn: Callable(output) -> (scalar loss, d loss / d output)
        eps: Finite-difference step

    Returns:
        Maximum relative error over all parameter tensors
    """
    def evaluate(with_grad):
        output = net.forward(inputs)
        loss, grad = loss_fn(output)
        if with_grad:
            net.backward(grad)
        return float(loss)

    errors = check_gradients(net.parameters(), evaluate, eps=eps)
    return max(errors.values())


def check_loss(output_shape, seed=0):
    """
    A fixed smooth scalar loss for gradient checks.

    L = Σ c·y + ½ Σ y², with c drawn from `seed`.

    Returns:
        Callable(output) -> (loss, gradient)
    """
    weights = np.random.default_rng(seed).standard_normal(output_shape)

    def loss_fn(output):
        return float(np.sum(weights * output) + 0.5 * np.sum(output * output)), weights + output

    return loss_fn
