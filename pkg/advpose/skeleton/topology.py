"""
Skeleton topology for advpose.

This module contains the SkeletonTopology type, the embedded 16-joint default
skeleton, validation of topology invariants and YAML (de)serialization of
skeleton documents.
"""

import os
from dataclasses import dataclass, field

import yaml

LIMB_GROUP_NAMES = ("U.Arms", "L.Arms", "U.Legs", "L.Legs")

# 16 joints, MPII-style: pelvis root, legs, spine/neck/head, arms.
_DEFAULT_SKELETON = {
    "names": [
        "pelvis", "r_hip", "r_knee", "r_ankle", "l_hip", "l_knee", "l_ankle",
        "spine", "neck", "head_top", "l_shoulder", "l_elbow", "l_wrist",
        "r_shoulder", "r_elbow", "r_wrist",
    ],
    "parent": [0, 0, 1, 2, 0, 4, 5, 0, 7, 8, 8, 10, 11, 8, 13, 14],
    "symmetry_pairs": [[4, 1], [5, 2], [6, 3], [10, 13], [11, 14], [12, 15]],
    "limb_groups": {
        "U.Arms": [11, 14],
        "L.Arms": [12, 15],
        "U.Legs": [2, 5],
        "L.Legs": [3, 6],
    },
    "head_segment": [8, 9],
    "root": 0,
}


@dataclass(frozen=True, eq=False)
class SkeletonTopology:
    """
    Articulated body description.

    Attributes:
        names: One label per joint
        parent: Parent index per joint; the root points to itself
        symmetry_pairs: (left, right) joint index pairs
        limb_groups: Group name -> joint indices used for per-limb errors
        head_segment: Joint pair whose length sets the PCKh threshold
        root: Root joint index
    """

    names: tuple
    parent: tuple
    symmetry_pairs: tuple
    limb_groups: dict = field(default_factory=dict)
    head_segment: tuple = (0, 0)
    root: int = 0

    @property
    def joint_count(self):
        return len(self.parent)

    @property
    def bones(self):
        """(parent, child) index pairs for every non-root joint, in joint order."""
        return [(p, j) for j, p in enumerate(self.parent) if j != self.root]

    def children(self, joint):
        return [j for j, p in enumerate(self.parent) if p == joint and j != joint]

    def subtree(self, joint):
        """Return `joint` and all of its descendants, parents before children."""
        order = [joint]
        index = 0
        while index < len(order):
            order.extend(self.children(order[index]))
            index += 1
        return order

    def mirror_map(self):
        """Map each joint to its symmetric counterpart (itself when unpaired)."""
        mirror = list(range(self.joint_count))
        for left, right in self.symmetry_pairs:
            mirror[left] = right
            mirror[right] = left
        return mirror

    def to_dict(self):
        return {
            "names": list(self.names),
            "parent": list(self.parent),
            "symmetry_pairs": [list(pair) for pair in self.symmetry_pairs],
            "limb_groups": {name: list(joints) for name, joints in self.limb_groups.items()},
            "head_segment": list(self.head_segment),
            "root": self.root,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            names=tuple(data["names"]),
            parent=tuple(int(p) for p in data["parent"]),
            symmetry_pairs=tuple(tuple(int(j) for j in pair) for pair in data.get("symmetry_pairs", [])),
            limb_groups={name: tuple(int(j) for j in joints)
                         for name, joints in data.get("limb_groups", {}).items()},
            head_segment=tuple(int(j) for j in data["head_segment"]),
            root=int(data.get("root", 0)),
        )


def default_topology():
    """Return the embedded 16-joint skeleton."""
    return SkeletonTopology.from_dict(_DEFAULT_SKELETON)


def validate_topology(topology):
    """
    Check every SkeletonTopology invariant.

    Violations are returned as data rather than raised, so a loader can
    report all of them at once.

    Args:
        topology: The SkeletonTopology to check

    Returns:
        List of violation messages, empty when the topology is valid
    """
    violations = []
    count = topology.joint_count
    parent = topology.parent

    if count == 0:
        return ["skeleton has no joints"]
    if len(topology.names) != count:
        violations.append(f"names has {len(topology.names)} entries for {count} joints")
    if not 0 <= topology.root < count:
        violations.append(f"root {topology.root} out of range")

    if any(not 0 <= p < count for p in parent):
        violations.append("parent index out of range")
    else:
        self_parents = [j for j, p in enumerate(parent) if p == j]
        if self_parents != [topology.root]:
            violations.append("not a tree: exactly one joint, the root, must be its own parent")
        else:
            for joint in range(count):
                current, steps = joint, 0
                while current != topology.root and steps <= count:
                    current = parent[current]
                    steps += 1
                if current != topology.root:
                    violations.append(f"not a tree: joint {joint} does not reach the root")
                    break

    seen = set()
    for left, right in topology.symmetry_pairs:
        if left == right:
            violations.append(f"symmetry pair ({left},{right}): left equals right")
        if left in seen or right in seen:
            violations.append(f"symmetry pair ({left},{right}) shares a joint with another pair")
        if not (0 <= left < count and 0 <= right < count):
            violations.append(f"symmetry pair ({left},{right}) out of range")
        seen.update((left, right))

    for name, joints in topology.limb_groups.items():
        if any(not 0 <= j < count for j in joints):
            violations.append(f"limb group {name} has joints outside [0, {count})")

    a, b = topology.head_segment
    if a == b:
        violations.append("head segment joints are not distinct")
    if not (0 <= a < count and 0 <= b < count):
        violations.append("head segment out of range")

    return violations


def load_topology(file_path):
    """
    Read a skeleton document from YAML.

    Args:
        file_path: Path to the skeleton YAML file

    Returns:
        SkeletonTopology

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: If the document is malformed or violates an invariant
    """
    if not os.path.exists(file_path):
        raise FileNotFoundError(f"Skeleton file not found: {file_path}")
    with open(file_path, "r") as handle:
        data = yaml.safe_load(handle)
    if not isinstance(data, dict):
        raise ValueError("Skeleton document must be a mapping")
    for key in ("names", "parent", "head_segment"):
        if key not in data:
            raise ValueError(f"Skeleton document is missing required field: {key}")

    topology = SkeletonTopology.from_dict(data)
    violations = validate_topology(topology)
    if violations:
        raise ValueError("Invalid skeleton: " + "; ".join(violations))
    return topology


def save_topology(topology, file_path):
    """Write a skeleton document as YAML, creating parent directories."""
    directory = os.path.dirname(file_path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)
    with open(file_path, "w") as handle:
        yaml.safe_dump(topology.to_dict(), handle, default_flow_style=None, sort_keys=False)
