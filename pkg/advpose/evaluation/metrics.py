"""
Pose metrics.

Protocol #1 aligns only the root depth of each prediction; Protocol #2 aligns
each prediction to its ground truth with the optimal similarity transform.
All errors are in millimeters, accuracies in percent.
"""

import logging

import numpy as np

from advpose.encode.encoder import NOMINAL_ROOT_DEPTH_MM, heatmap_scale
from advpose.encode.geometry import compose_3d_coords
from advpose.encode.maps import decode_heatmaps
from advpose.errors import CountMismatchError, MissingLabelsError, ZeroHeadSegmentError
from advpose.evaluation.alignment import procrustes_align, root_depth_align
from advpose.training.batches import make_batch
from advpose.training.losses import generator_outputs

logger = logging.getLogger(__name__)

PCK3D_THRESHOLD_MM = 150.0
AUC_THRESHOLDS_MM = np.arange(5.0, 151.0, 5.0)
PCKH_FRACTION = 0.5
# Back-projection floor for evaluating untrained depth regressors.
MIN_EVAL_DEPTH_MM = 1.0


def _stack(poses, width):
    array = np.asarray([np.asarray(getattr(pose, "coords", pose), dtype=np.float64) for pose in poses])
    if array.ndim != 3 or array.shape[2] != width:
        raise CountMismatchError(f"Expected a list of (P, {width}) poses, got shape {array.shape}")
    return array


def _paired(preds, gts, width=3):
    preds, gts = _stack(preds, width), _stack(gts, width)
    if preds.shape != gts.shape:
        raise CountMismatchError(f"{preds.shape[0]} predictions of {preds.shape[1]} joints vs "
                                 f"{gts.shape[0]} ground truths of {gts.shape[1]} joints")
    return preds, gts


def joint_errors(preds, gts, root=0):
    """(N, P) Euclidean errors after root-depth alignment."""
    preds, gts = _paired(preds, gts)
    aligned = np.stack([root_depth_align(pred, gt, root) for pred, gt in zip(preds, gts)]) if len(preds) else preds
    return np.linalg.norm(aligned - gts, axis=2)


def mpjpe(preds, gts, root=0):
    """
    Protocol #1 MPJPE.

    Raises:
        CountMismatchError: If counts or joint numbers differ
    """
    errors = joint_errors(preds, gts, root)
    return float(errors.mean()) if errors.size else 0.0


def mpjpe_p2(preds, gts, with_scale=True):
    """Protocol #2 MPJPE: per-sample Procrustes alignment, then MPJPE."""
    preds, gts = _paired(preds, gts)
    if not len(preds):
        return 0.0
    aligned = np.stack([procrustes_align(pred, gt, with_scale=with_scale) for pred, gt in zip(preds, gts)])
    return float(np.linalg.norm(aligned - gts, axis=2).mean())


def pckh_2d(preds2d, gts2d, topology):
    """
    PCKh@0.5: percent of 2D joints closer than half the head segment.

    Raises:
        ZeroHeadSegmentError: If a ground-truth head segment has zero length
    """
    preds, gts = _paired(preds2d, gts2d, width=2)
    top, bottom = topology.head_segment
    head = np.linalg.norm(gts[:, top] - gts[:, bottom], axis=1)
    if np.any(head == 0):
        raise ZeroHeadSegmentError("Head segment has zero length")
    errors = np.linalg.norm(preds - gts, axis=2)
    correct = errors < PCKH_FRACTION * head[:, None]
    return 100.0 * float(correct.mean())


def pck3d_auc(preds, gts, root=0, threshold=PCK3D_THRESHOLD_MM, thresholds=AUC_THRESHOLDS_MM):
    """
    3D PCK at `threshold` and its AUC over `thresholds`, after root-depth alignment.

    Returns:
        Tuple of (pck, auc) in percent
    """
    errors = joint_errors(preds, gts, root)
    pck = 100.0 * float((errors < threshold).mean())
    auc = 100.0 * float(np.mean([(errors < t).mean() for t in thresholds]))
    return pck, auc


def per_group_error(preds, gts, topology, root=0):
    """Protocol #1 MPJPE restricted to each limb group."""
    errors = joint_errors(preds, gts, root)
    return {name: float(errors[:, list(joints)].mean()) for name, joints in topology.limb_groups.items()}


def _root_relative(sample, root):
    coords = sample.pose3d.coords
    return coords - coords[root]


def mean_pose_baseline(train_samples, test_samples, root=0):
    """
    MPJPE of predicting the mean root-relative training pose for every test sample.

    The mean pose is placed at each ground-truth root.

    Raises:
        MissingLabelsError: If either set has no 3D labels
    """
    train = [_root_relative(sample, root) for sample in train_samples if sample.has_3d]
    tests = [sample for sample in test_samples if sample.has_3d]
    if not train or not tests:
        raise MissingLabelsError("The mean-pose baseline needs 3D labels on both sets")
    mean_pose = np.mean(train, axis=0)
    preds = [mean_pose + sample.pose3d.coords[root] for sample in tests]
    return mpjpe(preds, [sample.pose3d.coords for sample in tests], root=root)


def predict_poses(generator, samples, heatmap_size, root=0, root_depth=NOMINAL_ROOT_DEPTH_MM, batch_size=64):
    """
    Run the generator for evaluation.

    2D joints are decoded from the heatmaps by argmax refinement; 3D joints
    are back-projected from them using the predicted root-relative depths
    offset by the ground-truth root depth (the nominal root depth for
    unlabeled samples).

    Returns:
        Tuple of ((N, P, 3) camera-frame poses, (N, P, 2) pixel poses)
    """
    poses3d, poses2d = [], []
    for start in range(0, len(samples), batch_size):
        chunk = samples[start:start + batch_size]
        batch = make_batch(chunk, heatmap_size, root)
        heatmaps, depths = generator_outputs(generator, batch)
        for row, sample in enumerate(chunk):
            pixels = decode_heatmaps(heatmaps[row]) / heatmap_scale(sample.image.shape, heatmap_size)
            base = sample.pose3d.coords[root, 2] if sample.has_3d else root_depth
            absolute = depths[row] + base
            if np.any(absolute < MIN_EVAL_DEPTH_MM):
                logger.debug("Sample %d: clamping %d joints behind the camera", sample.id,
                             int(np.sum(absolute < MIN_EVAL_DEPTH_MM)))
                absolute = np.maximum(absolute, MIN_EVAL_DEPTH_MM)
            poses3d.append(compose_3d_coords(pixels, absolute, sample.camera))
            poses2d.append(pixels)
    joints = generator.config.joint_count
    return (np.array(poses3d).reshape(-1, joints, 3), np.array(poses2d).reshape(-1, joints, 2))


def validation_mpjpe(generator, samples, heatmap_size, root=0):
    """Protocol #1 MPJPE of the generator on labeled samples."""
    labeled = [sample for sample in samples if sample.has_3d]
    if not labeled:
        raise MissingLabelsError("Validation needs samples with 3D labels")
    preds, _ = predict_poses(generator, labeled, heatmap_size, root=root)
    return mpjpe(preds, [sample.pose3d.coords for sample in labeled], root=root)
