"""
Pose alignment for the evaluation protocols.
"""

import numpy as np
from scipy.linalg import det, svd

from advpose.errors import DegenerateConfigurationError, ShapeMismatchError
from advpose.skeleton.camera import Pose3D

_COLLINEAR_TOLERANCE = 1e-9


def _coords(pose):
    return np.asarray(getattr(pose, "coords", pose), dtype=np.float64)


def root_depth_align(pred, gt, root=0):
    """
    Translate `pred` along z so its root depth equals the ground truth's.

    Args:
        pred, gt: Pose3D or (P, 3) arrays with the same P
        root: Root joint index

    Returns:
        Aligned Pose3D in pred's frame (plain array for array input)
    """
    pred_coords, gt_coords = _coords(pred), _coords(gt)
    if pred_coords.shape != gt_coords.shape:
        raise ShapeMismatchError(f"Cannot align {pred_coords.shape} to {gt_coords.shape}")
    aligned = pred_coords.copy()
    aligned[:, 2] += gt_coords[root, 2] - pred_coords[root, 2]
    if isinstance(pred, Pose3D):
        return Pose3D(aligned, frame=pred.frame)
    return aligned


def similarity_transform(pred, gt, with_scale=True):
    """
    Least-squares similarity transform taking pred onto gt.

    Rotation from the SVD of the cross-covariance with a determinant
    correction, so reflections are never returned.

    Args:
        pred, gt: (P, 3) arrays
        with_scale: Solve for a scale factor (otherwise s = 1)

    Returns:
        Tuple of (scale, (3, 3) rotation, (3,) translation)

    Raises:
        DegenerateConfigurationError: If P < 3 or gt is collinear
    """
    pred, gt = _coords(pred), _coords(gt)
    if pred.shape != gt.shape:
        raise ShapeMismatchError(f"Cannot align {pred.shape} to {gt.shape}")
    if pred.shape[0] < 3:
        raise DegenerateConfigurationError("Procrustes alignment needs at least 3 joints")

    pred_mean, gt_mean = pred.mean(axis=0), gt.mean(axis=0)
    x, y = pred - pred_mean, gt - gt_mean
    gt_spread = svd(y, compute_uv=False)
    if gt_spread[0] == 0 or gt_spread[1] <= _COLLINEAR_TOLERANCE * gt_spread[0]:
        raise DegenerateConfigurationError("Ground-truth joints are collinear")

    u, singular, vt = svd(x.T @ y)
    correction = np.eye(3)
    if det(vt.T @ u.T) < 0:
        correction[2, 2] = -1.0
    rotation = vt.T @ correction @ u.T

    scale = 1.0
    if with_scale:
        spread = float(np.sum(x * x))
        if spread == 0:
            raise DegenerateConfigurationError("Predicted joints all coincide")
        scale = float(np.sum(singular * np.diag(correction))) / spread
    translation = gt_mean - scale * rotation @ pred_mean
    return scale, rotation, translation


def procrustes_align(pred, gt, with_scale=True):
    """
    Align pred to gt with the optimal rigid (or similarity) transform.

    Returns:
        Aligned Pose3D in gt's frame (plain array for array input)

    Raises:
        DegenerateConfigurationError: If P < 3 or gt is collinear
    """
    scale, rotation, translation = similarity_transform(pred, gt, with_scale=with_scale)
    aligned = scale * _coords(pred) @ rotation.T + translation
    if isinstance(gt, Pose3D):
        return Pose3D(aligned, frame=gt.frame)
    return aligned
