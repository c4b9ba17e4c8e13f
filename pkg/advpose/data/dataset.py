"""
Synthetic dataset generation and the dataset file format.

A dataset file is line-oriented text. The first line is a header:

    # advpose-dataset version=1 domain=lab joints=16 image=32x32 has_3d_labels=1 count=N

followed by one tab-separated record per sample:

    id  domain  image  pose2d  pose3d  camera

Arrays are hex-encoded little-endian bytes: the image as 32-bit floats, poses
and the 16 camera parameters as 64-bit floats. A sample without 3D labels
carries "-" in the pose3d column.
"""

import logging
import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from advpose.data.anthropometry import sample_pose
from advpose.data.domains import sample_camera
from advpose.data.render import render_stick_figure
from advpose.errors import DatasetFormatError
from advpose.skeleton.camera import CameraModel, Pose2D, Pose3D, CAMERA, camera_to_pixels, project

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
HEADER_PREFIX = "# advpose-dataset"
PROJECTION_TOLERANCE_PX = 1e-6
_IMAGE_DTYPE = "<f4"
_POSE_DTYPE = "<f8"


@dataclass(frozen=True, eq=False)
class SyntheticSample:
    """
    One rendered sample.

    Attributes:
        id: Sample index inside its dataset
        domain: Domain label
        image: (H_img, W_img) grayscale image in [0, 1]
        pose2d: Pose2D in image pixels
        pose3d: Camera-frame Pose3D, or None when the domain has no 3D labels
        camera: CameraModel used for projection
    """

    id: int
    domain: str
    image: np.ndarray
    pose2d: Pose2D
    pose3d: Pose3D
    camera: CameraModel

    @property
    def has_3d(self):
        return self.pose3d is not None

    def projection_error(self):
        """Max pixel distance between pose2d and the reprojected pose3d."""
        if self.pose3d is None:
            return 0.0
        reprojected = camera_to_pixels(self.pose3d.coords, self.camera)
        return float(np.max(np.abs(reprojected - self.pose2d.coords)))


@dataclass(eq=False)
class DatasetFile:
    """In-memory contents of one dataset file."""

    domain: str
    joint_count: int
    image_size: tuple
    has_3d_labels: bool
    samples: list = field(default_factory=list)

    def __len__(self):
        return len(self.samples)


def sample_seed(seed, domain_name, index):
    """Per-sample seed sequence; independent of generation order."""
    return np.random.SeedSequence([int(seed), zlib.crc32(domain_name.encode("utf-8")), int(index)])


def generate_sample(domain, model, seed, index):
    """Generate sample `index` of a domain from its own seed."""
    rng = np.random.default_rng(sample_seed(seed, domain.name, index))
    world_pose = sample_pose(model, domain.pose_scope, rng)
    camera = sample_camera(domain, rng)
    camera_pose, pose2d = project(world_pose, camera)
    image = render_stick_figure(pose2d, domain.image_size, model.topology.bones)
    return SyntheticSample(
        id=index,
        domain=domain.name,
        image=image,
        pose2d=pose2d,
        pose3d=camera_pose if domain.has_3d_labels else None,
        camera=camera,
    )


def generate_dataset(domain, model, n, seed, path=None, workers=1):
    """
    Generate `n` samples of a domain, optionally writing them to a file.

    Every sample draws from its own seed derived from (seed, domain, index),
    so the output does not depend on `workers`.

    Args:
        domain: DomainSpec
        model: AnthropometricModel
        n: Number of samples, > 0
        seed: Integer base seed
        path: Output file path (optional)
        workers: Thread count for generation

    Returns:
        DatasetFile

    Raises:
        ValueError: If n <= 0
        OSError: If the file cannot be written
    """
    if n <= 0:
        raise ValueError("dataset size must be positive")

    def build(index):
        return generate_sample(domain, model, seed, index)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(build, range(n)))
    else:
        samples = [build(index) for index in range(n)]

    dataset = DatasetFile(domain=domain.name, joint_count=model.topology.joint_count,
                          image_size=tuple(domain.image_size), has_3d_labels=domain.has_3d_labels,
                          samples=samples)
    logger.info("Generated %d %s samples (seed %d)", n, domain.name, seed)
    if path is not None:
        write_dataset(dataset, path)
    return dataset


def _encode(array, dtype):
    return np.ascontiguousarray(array, dtype=dtype).tobytes().hex()


def _decode(text, dtype, shape, label, line_number):
    try:
        values = np.frombuffer(bytes.fromhex(text), dtype=dtype)
        return values.astype(np.float64).reshape(shape)
    except ValueError as e:
        raise DatasetFormatError(f"Line {line_number}: bad {label} field: {e}")


def write_dataset(dataset, path):
    """Write a DatasetFile in the record-per-line text format."""
    directory = os.path.dirname(path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)
    height, width = dataset.image_size
    lines = [f"{HEADER_PREFIX} version={FORMAT_VERSION} domain={dataset.domain} "
             f"joints={dataset.joint_count} image={height}x{width} "
             f"has_3d_labels={int(dataset.has_3d_labels)} count={len(dataset.samples)}"]
    for sample in dataset.samples:
        pose3d = _encode(sample.pose3d.coords, _POSE_DTYPE) if sample.pose3d is not None else "-"
        lines.append("\t".join([
            str(sample.id),
            sample.domain,
            _encode(sample.image, _IMAGE_DTYPE),
            _encode(sample.pose2d.coords, _POSE_DTYPE),
            pose3d,
            _encode(sample.camera.to_vector(), _POSE_DTYPE),
        ]))
    with open(path, "w", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
    logger.info("Wrote %d samples to %s", len(dataset.samples), path)


def _parse_header(line):
    if not line.startswith(HEADER_PREFIX):
        raise DatasetFormatError("Missing dataset header")
    try:
        fields = dict(token.split("=", 1) for token in line[len(HEADER_PREFIX):].split())
        version = int(fields["version"])
        height, width = (int(v) for v in fields["image"].split("x"))
        header = {
            "domain": fields["domain"],
            "joints": int(fields["joints"]),
            "image_size": (height, width),
            "has_3d_labels": fields["has_3d_labels"] == "1",
            "count": int(fields["count"]),
        }
    except (KeyError, ValueError) as e:
        raise DatasetFormatError(f"Malformed dataset header: {e}")
    if version != FORMAT_VERSION:
        raise DatasetFormatError(f"Unsupported dataset version {version}")
    return header


def read_dataset(path):
    """
    Load a dataset file and check it against its header.

    Label discipline (no 3D poses in unlabeled files) and projection
    consistency of labeled samples are verified on load.

    Args:
        path: Dataset file path

    Returns:
        DatasetFile

    Raises:
        FileNotFoundError: If the file does not exist
        DatasetFormatError: If the file is malformed or inconsistent
    """
    if not os.path.exists(path):
        raise FileNotFoundError(f"Dataset file not found: {path}")
    with open(path, "r") as handle:
        lines = handle.read().splitlines()
    if not lines:
        raise DatasetFormatError(f"Empty dataset file: {path}")

    header = _parse_header(lines[0])
    joints = header["joints"]
    dataset = DatasetFile(domain=header["domain"], joint_count=joints, image_size=header["image_size"],
                          has_3d_labels=header["has_3d_labels"])

    for line_number, line in enumerate(lines[1:], start=2):
        parts = line.split("\t")
        if len(parts) != 6:
            raise DatasetFormatError(f"Line {line_number}: expected 6 fields, found {len(parts)}")
        sample_id, domain, image, pose2d, pose3d, camera = parts
        if pose3d != "-" and not dataset.has_3d_labels:
            raise DatasetFormatError(f"Line {line_number}: 3D labels in a dataset without 3D labels")
        if pose3d == "-" and dataset.has_3d_labels:
            raise DatasetFormatError(f"Line {line_number}: missing 3D labels")
        try:
            sample_number = int(sample_id)
            camera_model = CameraModel.from_vector(_decode(camera, _POSE_DTYPE, (16,), "camera", line_number))
        except ValueError as e:
            raise DatasetFormatError(f"Line {line_number}: bad sample id or camera: {e}")
        sample = SyntheticSample(
            id=sample_number,
            domain=domain,
            image=_decode(image, _IMAGE_DTYPE, header["image_size"], "image", line_number),
            pose2d=Pose2D(_decode(pose2d, _POSE_DTYPE, (joints, 2), "pose2d", line_number)),
            pose3d=(Pose3D(_decode(pose3d, _POSE_DTYPE, (joints, 3), "pose3d", line_number), frame=CAMERA)
                    if pose3d != "-" else None),
            camera=camera_model,
        )
        try:
            inconsistent = sample.projection_error() > PROJECTION_TOLERANCE_PX
        except ValueError as e:
            raise DatasetFormatError(f"Line {line_number}: cannot project pose3d: {e}")
        if inconsistent:
            raise DatasetFormatError(f"Line {line_number}: pose2d inconsistent with projected pose3d")
        dataset.samples.append(sample)

    if len(dataset.samples) != header["count"]:
        raise DatasetFormatError(f"Header announces {header['count']} samples, found {len(dataset.samples)}")
    return dataset
