"""
The pose generator: a 2D heatmap module followed by a depth regressor.

The 2D module maps a flattened image to P sigmoid heatmaps; its penultimate
activations are tapped as intermediate image features. The depth regressor
reads the flattened heatmaps concatenated with those features and outputs P
root-relative depths in millimeters.
"""

import logging
from dataclasses import dataclass

import numpy as np

from advpose.errors import NoForwardRecordedError, ShapeMismatchError
from advpose.nn.dense import DenseNet, DenseNetSpec, IDENTITY, RELU, SIGMOID

logger = logging.getLogger(__name__)

END_TO_END = "end-to-end"
FIX_2D = "fix-2d"
ORACLE_2D = "oracle-2d"
GENERATOR_MODES = (END_TO_END, FIX_2D, ORACLE_2D)

# Depth regressor outputs are in units of DEPTH_SCALE_MM.
DEPTH_SCALE_MM = 500.0


def child_seed(seed, index):
    """Deterministic per-network seed derived from a model seed."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


@dataclass(frozen=True)
class GeneratorConfig:
    """
    Generator architecture.

    Attributes:
        joint_count: P
        image_size: (H_img, W_img)
        heatmap_size: (H, W)
        two_d_widths: Hidden widths of the 2D module (last one is the feature tap)
        depth_widths: Hidden widths of the depth regressor
        seed: Initialization seed
        mode: end-to-end, fix-2d or oracle-2d
    """

    joint_count: int = 16
    image_size: tuple = (32, 32)
    heatmap_size: tuple = (16, 16)
    two_d_widths: tuple = (1024, 1024)
    depth_widths: tuple = (512, 256)
    seed: int = 0
    mode: str = END_TO_END


class GeneratorModel:
    """
    Two-stage 3D pose estimator.

    Attributes:
        two_d_module: DenseNet image -> heatmaps (sigmoid)
        depth_regressor: DenseNet [heatmaps, features] -> depths
        mode: end-to-end, fix-2d (2D module frozen) or oracle-2d (ground-truth
            heatmaps replace the 2D module output, which is also frozen)
    """

    def __init__(self, config):
        if config.mode not in GENERATOR_MODES:
            raise ValueError(f"Unknown generator mode '{config.mode}'")
        if not config.two_d_widths:
            raise ValueError("The 2D module needs at least one hidden layer for its feature tap")
        self.config = config
        self.mode = config.mode
        joints = config.joint_count
        self.map_shape = (joints,) + tuple(config.heatmap_size)
        self.map_size = int(np.prod(self.map_shape))
        image_width = int(np.prod(config.image_size))

        hidden = tuple(config.two_d_widths)
        self.two_d_module = DenseNet(DenseNetSpec(
            input_width=image_width,
            widths=hidden + (self.map_size,),
            activations=(RELU,) * len(hidden) + (SIGMOID,),
            seed=child_seed(config.seed, 0),
        ), name="g/two_d")
        self.feature_layer = len(hidden) - 1
        self.feature_width = hidden[-1]
        self.depth_regressor = self._build_depth_regressor(child_seed(config.seed, 1))
        self._record = None

    def _build_depth_regressor(self, seed):
        widths = tuple(self.config.depth_widths)
        return DenseNet(DenseNetSpec(
            input_width=self.map_size + self.feature_width,
            widths=widths + (self.config.joint_count,),
            activations=(RELU,) * len(widths) + (IDENTITY,),
            seed=seed,
        ), name="g/depth")

    @property
    def trains_two_d(self):
        return self.mode == END_TO_END

    def freeze_two_d(self):
        """Stop gradients from reaching the 2D module (fix-2d)."""
        if self.mode == END_TO_END:
            self.mode = FIX_2D

    def reset_depth_regressor(self, seed=None):
        """Re-initialize the depth regressor (2D module untouched)."""
        seed = child_seed(self.config.seed, 1) if seed is None else seed
        self.depth_regressor.reset(seed)

    def two_d_parameters(self):
        return self.two_d_module.parameters()

    def depth_parameters(self):
        return self.depth_regressor.parameters()

    def parameters(self):
        return self.two_d_parameters() + self.depth_parameters()

    def trainable_parameters(self):
        """Parameters updated by joint training in the current mode."""
        if self.trains_two_d:
            return self.parameters()
        return self.depth_parameters()

    def zero_grad(self):
        self.two_d_module.zero_grad()
        self.depth_regressor.zero_grad()

    def forward(self, images, oracle_heatmaps=None, with_depth=True):
        """
        Predict heatmaps and root-relative depths.

        Args:
            images: (B, H_img, W_img) or (B, H_img·W_img) images
            oracle_heatmaps: (B, P, H, W) ground-truth heatmaps (oracle-2d mode)
            with_depth: Skip the depth regressor when False

        Returns:
            Tuple of ((B, P, H, W) heatmaps, (B, P) depths in mm or None)

        Raises:
            ShapeMismatchError: If the image size is wrong or oracle
                heatmaps are missing in oracle-2d mode
        """
        images = np.asarray(images, dtype=np.float64)
        batch = images.shape[0]
        flat = images.reshape(batch, -1)
        if flat.shape[1] != self.two_d_module.input_width:
            raise ShapeMismatchError(f"Generator expects {self.config.image_size} images, got {images.shape[1:]}")

        predicted = self.two_d_module.forward(flat)
        features = self.two_d_module.layer_output(self.feature_layer)
        if self.mode == ORACLE_2D:
            if oracle_heatmaps is None:
                raise ShapeMismatchError("oracle-2d mode needs ground-truth heatmaps")
            heatmaps = np.asarray(oracle_heatmaps, dtype=np.float64).reshape(batch, self.map_size)
        else:
            heatmaps = predicted

        depths = None
        if with_depth:
            depth_input = np.concatenate([heatmaps, features], axis=1)
            depths = self.depth_regressor.forward(depth_input) * DEPTH_SCALE_MM
        self._record = (batch, with_depth)
        return heatmaps.reshape((batch,) + self.map_shape), depths

    def backward(self, grad_heatmaps=None, grad_depths=None):
        """
        Backpropagate gradients on the outputs into the parameters.

        Gradients reach the 2D module only in end-to-end mode.

        Args:
            grad_heatmaps: (B, P, H, W) gradient, or None
            grad_depths: (B, P) gradient in 1/mm units, or None
        """
        if self._record is None:
            raise NoForwardRecordedError("Generator backward() called before forward()")
        batch, with_depth = self._record
        grad_maps = np.zeros((batch, self.map_size))
        if grad_heatmaps is not None:
            grad_maps += np.asarray(grad_heatmaps, dtype=np.float64).reshape(batch, self.map_size)

        grad_features = None
        if grad_depths is not None:
            if not with_depth:
                raise NoForwardRecordedError("Depth gradient given but the depth regressor did not run")
            grad_input = self.depth_regressor.backward(np.asarray(grad_depths) * DEPTH_SCALE_MM)
            grad_maps += grad_input[:, :self.map_size]
            grad_features = grad_input[:, self.map_size:]

        if self.trains_two_d:
            taps = {self.feature_layer: grad_features} if grad_features is not None else None
            self.two_d_module.backward(grad_maps, taps=taps)

    def backward_two_d(self, grad_heatmaps):
        """Heatmap-only backward into the 2D module, regardless of mode (2D pretraining)."""
        if self._record is None:
            raise NoForwardRecordedError("Generator backward() called before forward()")
        batch = self._record[0]
        self.two_d_module.backward(np.asarray(grad_heatmaps, dtype=np.float64).reshape(batch, self.map_size))

    def state_dict(self):
        state = dict(self.two_d_module.state_dict())
        state.update(self.depth_regressor.state_dict())
        return state

    def load_state_dict(self, state, two_d_only=False):
        self.two_d_module.load_state_dict(state)
        if not two_d_only:
            self.depth_regressor.load_state_dict(state)
        self._record = None


def g_forward(model, images, oracle_heatmaps=None):
    """Functional alias of GeneratorModel.forward."""
    return model.forward(images, oracle_heatmaps=oracle_heatmaps)
