"""
Anthropometric pose sampling for advpose.

This module contains the AnthropometricModel (bone length statistics, joint
angle limits, rest pose), forward kinematics, random pose sampling, and the
corruptions that turn plausible poses into implausible negatives.
"""

from dataclasses import dataclass

import numpy as np

from advpose.skeleton.camera import Pose3D, WORLD
from advpose.skeleton.topology import default_topology

LIMB_SWAP = "limb-swap"
LENGTH_SCALE = "length-scale"
ANGLE_VIOLATION = "angle-violation"
CORRUPTION_MODES = (LIMB_SWAP, LENGTH_SCALE, ANGLE_VIOLATION)

TRUNCATION_SIGMAS = 2.0

# Per joint of the default skeleton: bone (parent -> joint) mean length in mm,
# rest direction in the world frame, and (min, max) Euler limits for the
# rotation applied at that joint.
_DEFAULT_BONES = {
    "pelvis": (0.0, (0, 0, 0), ((-0.3, 0.3), (-np.pi, np.pi), (-0.2, 0.2))),
    "r_hip": (110.0, (-1, 0, 0), ((-1.6, 0.5), (-0.5, 0.5), (-0.5, 0.5))),
    "r_knee": (440.0, (0, -1, 0), ((0.0, 2.2), (0.0, 0.0), (0.0, 0.0))),
    "r_ankle": (420.0, (0, -1, 0), ((0.0, 0.0), (0.0, 0.0), (0.0, 0.0))),
    "l_hip": (110.0, (1, 0, 0), ((-1.6, 0.5), (-0.5, 0.5), (-0.5, 0.5))),
    "l_knee": (440.0, (0, -1, 0), ((0.0, 2.2), (0.0, 0.0), (0.0, 0.0))),
    "l_ankle": (420.0, (0, -1, 0), ((0.0, 0.0), (0.0, 0.0), (0.0, 0.0))),
    "spine": (240.0, (0, 1, 0), ((-0.3, 0.9), (-0.5, 0.5), (-0.3, 0.3))),
    "neck": (260.0, (0, 1, 0), ((-0.5, 0.6), (-0.8, 0.8), (-0.4, 0.4))),
    "head_top": (200.0, (0, 1, 0), ((0.0, 0.0), (0.0, 0.0), (0.0, 0.0))),
    "l_shoulder": (160.0, (1, 0, 0), ((-2.4, 1.0), (-0.6, 0.6), (-1.4, 1.4))),
    "l_elbow": (280.0, (0, -1, 0), ((-2.3, 0.0), (-0.5, 0.5), (0.0, 0.0))),
    "l_wrist": (250.0, (0, -1, 0), ((0.0, 0.0), (0.0, 0.0), (0.0, 0.0))),
    "r_shoulder": (160.0, (-1, 0, 0), ((-2.4, 1.0), (-0.6, 0.6), (-1.4, 1.4))),
    "r_elbow": (280.0, (0, -1, 0), ((-2.3, 0.0), (-0.5, 0.5), (0.0, 0.0))),
    "r_wrist": (250.0, (0, -1, 0), ((0.0, 0.0), (0.0, 0.0), (0.0, 0.0))),
}
_DEFAULT_RELATIVE_STD = 0.05


def euler_matrix(angles):
    """Rotation R = Rz(γ)·Ry(β)·Rx(α) for angles (α, β, γ) in radians."""
    a, b, g = angles
    ca, sa, cb, sb, cg, sg = np.cos(a), np.sin(a), np.cos(b), np.sin(b), np.cos(g), np.sin(g)
    rx = np.array([[1, 0, 0], [0, ca, -sa], [0, sa, ca]])
    ry = np.array([[cb, 0, sb], [0, 1, 0], [-sb, 0, cb]])
    rz = np.array([[cg, -sg, 0], [sg, cg, 0], [0, 0, 1]])
    return rz @ ry @ rx


def rotation_about_axis(axis, angle):
    """Rodrigues rotation matrix for a unit axis and an angle in radians."""
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * (k @ k)


@dataclass(frozen=True, eq=False)
class AnthropometricModel:
    """
    Statistical body model used to synthesize plausible poses.

    Arrays are indexed by joint; entry j of a bone array describes the bone
    from parent(j) to j (the root entry is unused).

    Attributes:
        topology: SkeletonTopology the model applies to
        bone_length_mean: (P,) mean bone lengths, millimeters
        bone_length_std: (P,) bone length standard deviations, millimeters
        rest_directions: (P, 3) unit bone directions in the rest pose
        joint_angle_limits: (P, 3, 2) Euler (min, max) per joint, radians
        rest_pose_angles: (P, 3) Euler angles of the rest pose, radians
    """

    topology: object
    bone_length_mean: np.ndarray
    bone_length_std: np.ndarray
    rest_directions: np.ndarray
    joint_angle_limits: np.ndarray
    rest_pose_angles: np.ndarray

    def validate(self):
        """Return a list of violated invariants (empty when valid)."""
        violations = []
        bones = [child for _, child in self.topology.bones]
        if np.any(self.bone_length_mean[bones] <= 0):
            violations.append("bone length means must be positive")
        if np.any(self.bone_length_std < 0):
            violations.append("bone length std must be non-negative")
        if np.any(self.joint_angle_limits[..., 0] > self.joint_angle_limits[..., 1]):
            violations.append("angle limit min exceeds max")
        if np.any(self.rest_pose_angles < self.joint_angle_limits[..., 0]) or \
                np.any(self.rest_pose_angles > self.joint_angle_limits[..., 1]):
            violations.append("rest pose lies outside the angle limits")
        for left, right in self.topology.symmetry_pairs:
            if self.bone_length_mean[left] != self.bone_length_mean[right] or \
                    self.bone_length_std[left] != self.bone_length_std[right]:
                violations.append(f"symmetric bones {left}/{right} differ in length statistics")
        return violations

    def scaled_limits(self, scope):
        """Angle limits shrunk toward the rest pose by `scope` ∈ (0, 1]."""
        rest = self.rest_pose_angles
        low = rest + scope * (self.joint_angle_limits[..., 0] - rest)
        high = rest + scope * (self.joint_angle_limits[..., 1] - rest)
        return low, high


def default_anthropometry(topology=None):
    """Anthropometric model matching the embedded 16-joint skeleton."""
    topology = topology or default_topology()
    mean = np.array([_DEFAULT_BONES[name][0] for name in topology.names])
    directions = np.array([_DEFAULT_BONES[name][1] for name in topology.names], dtype=np.float64)
    limits = np.array([_DEFAULT_BONES[name][2] for name in topology.names], dtype=np.float64)
    return AnthropometricModel(
        topology=topology,
        bone_length_mean=mean,
        bone_length_std=mean * _DEFAULT_RELATIVE_STD,
        rest_directions=directions,
        joint_angle_limits=limits,
        rest_pose_angles=np.zeros((topology.joint_count, 3)),
    )


@dataclass(frozen=True, eq=False)
class PoseParameters:
    """Drawn bone lengths (P,) and joint Euler angles (P, 3)."""

    lengths: np.ndarray
    angles: np.ndarray


def _truncated_normal(rng, size):
    draws = rng.standard_normal(size)
    outside = np.abs(draws) > TRUNCATION_SIGMAS
    while np.any(outside):
        draws[outside] = rng.standard_normal(int(outside.sum()))
        outside = np.abs(draws) > TRUNCATION_SIGMAS
    return draws


def sample_pose_parameters(model, scope, rng):
    """
    Draw bone lengths and joint angles.

    Lengths follow a Gaussian truncated at ±2σ; each angle is uniform inside
    the scope-scaled limits around the rest pose.
    """
    if not 0 < scope <= 1:
        raise ValueError(f"pose scope must lie in (0, 1], got {scope}")
    count = model.topology.joint_count
    lengths = model.bone_length_mean + model.bone_length_std * _truncated_normal(rng, count)
    lengths[model.topology.root] = 0.0
    low, high = model.scaled_limits(scope)
    angles = low + (high - low) * rng.random((count, 3))
    return PoseParameters(lengths=lengths, angles=angles)


def forward_kinematics(model, params):
    """
    Compose joint rotations and bone lengths from the root.

    The root sits at the world origin. The rotation at joint k moves every
    bone below k, so ‖child − parent‖ equals the drawn bone length exactly.

    Returns:
        Pose3D in the world frame
    """
    topology = model.topology
    count = topology.joint_count
    positions = np.zeros((count, 3))
    frames = np.zeros((count, 3, 3))
    root = topology.root
    frames[root] = euler_matrix(params.angles[root])
    for joint in topology.subtree(root)[1:]:
        parent = topology.parent[joint]
        frames[joint] = frames[parent] @ euler_matrix(params.angles[joint])
        bone = params.lengths[joint] * model.rest_directions[joint]
        positions[joint] = positions[parent] + frames[parent] @ bone
    return Pose3D(positions, frame=WORLD)


def sample_pose(model, scope, rng):
    """
    Sample a random plausible world-frame pose.

    Args:
        model: AnthropometricModel
        scope: Fraction of every joint's angle range to use, in (0, 1]
        rng: numpy Generator

    Returns:
        Pose3D in the world frame
    """
    return forward_kinematics(model, sample_pose_parameters(model, scope, rng))


def corrupt_pose(pose, mode, magnitude, rng, model):
    """
    Turn a pose into an anthropometrically invalid one.

    Modes:
        limb-swap: exchange the subtrees of one random symmetry pair
        length-scale: lengthen one random bone by a factor (1 + magnitude)
        angle-violation: bend one random inner joint past its limit range
            by `magnitude` radians, rotating its descendants about it

    Args:
        pose: Pose3D (any frame)
        mode: One of CORRUPTION_MODES
        magnitude: Strength of the corruption, > 0 (unused by limb-swap)
        rng: numpy Generator choosing the affected pair/bone/joint
        model: AnthropometricModel supplying topology and angle limits

    Returns:
        New Pose3D in the same frame
    """
    if magnitude <= 0:
        raise ValueError("corruption magnitude must be positive")
    topology = model.topology
    coords = np.array(pose.coords)

    if mode == LIMB_SWAP:
        left, right = topology.symmetry_pairs[rng.integers(len(topology.symmetry_pairs))]
        mirror = topology.mirror_map()
        for joint in topology.subtree(left):
            partner = mirror[joint]
            coords[[joint, partner]] = coords[[partner, joint]]

    elif mode == LENGTH_SCALE:
        bones = topology.bones
        parent, child = bones[rng.integers(len(bones))]
        offset = magnitude * (coords[child] - coords[parent])
        coords[topology.subtree(child)] += offset

    elif mode == ANGLE_VIOLATION:
        inner = [j for j in range(topology.joint_count)
                 if j != topology.root and topology.children(j)]
        joint = inner[rng.integers(len(inner))]
        parent = topology.parent[joint]
        child = topology.children(joint)[0]
        incoming = coords[joint] - coords[parent]
        outgoing = coords[child] - coords[joint]
        axis = np.cross(incoming, outgoing)
        if np.linalg.norm(axis) <= 1e-9 * np.linalg.norm(incoming) * np.linalg.norm(outgoing):
            helper = np.eye(3)[np.argmin(np.abs(incoming))]
            axis = np.cross(incoming, helper)
        low, high = model.joint_angle_limits[joint, 0]
        rotation = rotation_about_axis(axis, (high - low) + magnitude)
        below = topology.subtree(joint)[1:]
        coords[below] = (coords[below] - coords[joint]) @ rotation.T + coords[joint]

    else:
        raise ValueError(f"Unknown corruption mode '{mode}'. Valid options are: {', '.join(CORRUPTION_MODES)}")

    return Pose3D(coords, frame=pose.frame)
