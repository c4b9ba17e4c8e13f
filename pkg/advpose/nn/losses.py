"""
Loss functions.
"""

import numpy as np

BCE_EPSILON = 1e-7


def bce(y_hat, y):
    """
    Binary cross-entropy −(y·ln ŷ + (1−y)·ln(1−ŷ)), elementwise.

    ŷ is clamped to [ε, 1−ε] with ε = 1e-7, so the loss is always finite.

    Args:
        y_hat: Predicted probabilities (scalar or array)
        y: Targets in {0, 1}

    Returns:
        Loss with the broadcast shape of the inputs
    """
    clamped = np.clip(np.asarray(y_hat, dtype=np.float64), BCE_EPSILON, 1.0 - BCE_EPSILON)
    y = np.asarray(y, dtype=np.float64)
    return -(y * np.log(clamped) + (1.0 - y) * np.log(1.0 - clamped))


def bce_grad(y_hat, y):
    """
    d bce / d ŷ, evaluated at the clamped prediction.

    Through a sigmoid output this reduces to s − y away from the clamp.
    """
    clamped = np.clip(np.asarray(y_hat, dtype=np.float64), BCE_EPSILON, 1.0 - BCE_EPSILON)
    y = np.asarray(y, dtype=np.float64)
    return -y / clamped + (1.0 - y) / (1.0 - clamped)


def squared_error(prediction, target):
    """Sum of squared differences and its gradient w.r.t. the prediction."""
    diff = np.asarray(prediction, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return float(np.sum(diff * diff)), 2.0 * diff
