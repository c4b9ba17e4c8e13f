"""
Exception hierarchy for advpose.

Value-like failures also derive from ValueError and artifact failures from
IOError, so callers that only know the builtins can still catch them.
"""


class AdvPoseError(Exception):
    """Base class for every error raised by advpose."""


class NonPositiveDepthError(AdvPoseError, ValueError):
    """A joint lies on or behind the camera plane (z <= 0)."""


class ShapeMismatchError(AdvPoseError, ValueError):
    """Array shapes disagree with what an operation expects."""


class DegenerateMapError(AdvPoseError, ValueError):
    """A heatmap has no positive mass, so no coordinate can be extracted."""


class MissingLabelsError(AdvPoseError, ValueError):
    """A sample without 3D labels was used where 3D labels are required."""


class NoForwardRecordedError(AdvPoseError, RuntimeError):
    """backward() was called before forward()."""


class NonFiniteError(AdvPoseError, FloatingPointError):
    """A NaN or Inf appeared in values, gradients or losses."""


class UnknownVariantError(AdvPoseError, ValueError):
    """The requested ablation variant does not exist."""


class CountMismatchError(AdvPoseError, ValueError):
    """Prediction and ground-truth collections differ in size."""


class DegenerateConfigurationError(AdvPoseError, ValueError):
    """Point set is too small or collinear for a rigid alignment."""


class ZeroHeadSegmentError(AdvPoseError, ValueError):
    """The ground-truth head segment has zero length."""


class ConfigError(AdvPoseError, ValueError):
    """The experiment configuration is invalid."""


class DatasetFormatError(AdvPoseError, IOError):
    """A dataset file is malformed or violates its header."""


class CheckpointError(AdvPoseError, IOError):
    """Base class for unreadable checkpoint files."""


class BadMagicError(CheckpointError):
    """The file does not start with the checkpoint magic or is truncated."""


class VersionMismatchError(CheckpointError):
    """The checkpoint was written by an unsupported format version."""
