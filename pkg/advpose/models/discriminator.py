"""
The multi-source discriminator.

Each enabled information source (image, heatmaps with depth maps, geometric
descriptor) is embedded by its own dense branch; the embeddings are
concatenated in the fixed order image, maps, geo and scored by a dense head
with a sigmoid output. Disabled sources have no branch at all.
"""

import logging
from dataclasses import dataclass

import numpy as np

from advpose.encode.encoder import input_gradients, network_arrays
from advpose.errors import NoForwardRecordedError, ShapeMismatchError
from advpose.models.generator import child_seed
from advpose.nn.dense import DenseNet, DenseNetSpec, RELU, SIGMOID

logger = logging.getLogger(__name__)

IMAGE = "image"
MAPS = "maps"
GEO = "geo"
SOURCES = (IMAGE, MAPS, GEO)


@dataclass(frozen=True)
class DiscriminatorConfig:
    """
    Discriminator architecture.

    Attributes:
        joint_count: P
        image_size: (H_img, W_img)
        heatmap_size: (H, W)
        sources: Enabled sources, a subset of (image, maps, geo)
        embed_width: Output width of every branch
        head_widths: Hidden widths of the head (a width-1 sigmoid layer follows)
        seed: Initialization seed
    """

    joint_count: int = 16
    image_size: tuple = (32, 32)
    heatmap_size: tuple = (16, 16)
    sources: tuple = SOURCES
    embed_width: int = 128
    head_widths: tuple = (128, 64)
    seed: int = 0


class DiscriminatorModel:
    """
    Scores (image, pose encoding) pairs as real (1) or generated (0).

    Attributes:
        source_set: Enabled sources in canonical order
        branches: Dict source -> DenseNet embedder
        head: DenseNet on the concatenated embeddings
    """

    def __init__(self, config):
        unknown = [source for source in config.sources if source not in SOURCES]
        if unknown:
            raise ValueError(f"Unknown discriminator sources: {', '.join(unknown)}")
        if not config.sources:
            raise ValueError("The discriminator needs at least one source")
        self.config = config
        self.source_set = tuple(source for source in SOURCES if source in config.sources)
        joints = config.joint_count
        self.map_shape = (joints,) + tuple(config.heatmap_size)
        input_widths = {
            IMAGE: int(np.prod(config.image_size)),
            MAPS: 2 * int(np.prod(self.map_shape)),
            GEO: 6 * joints * joints,
        }

        self.branches = {}
        for source in self.source_set:
            self.branches[source] = DenseNet(DenseNetSpec(
                input_width=input_widths[source],
                widths=(config.embed_width,),
                activations=(RELU,),
                seed=child_seed(config.seed, 10 + SOURCES.index(source)),
            ), name=f"d/{source}")

        head_widths = tuple(config.head_widths)
        self.head = DenseNet(DenseNetSpec(
            input_width=config.embed_width * len(self.source_set),
            widths=head_widths + (1,),
            activations=(RELU,) * len(head_widths) + (SIGMOID,),
            seed=child_seed(config.seed, 20),
        ), name="d/head")
        self._batch = None

    def has_source(self, source):
        return source in self.branches

    def parameters(self):
        params = []
        for source in self.source_set:
            params.extend(self.branches[source].parameters())
        return params + self.head.parameters()

    def zero_grad(self):
        for tensor in self.parameters():
            tensor.zero_grad()

    def forward_arrays(self, images, maps, geo):
        """
        Score pre-flattened network inputs.

        Args:
            images: (B, H_img·W_img) array (ignored without the image source)
            maps: (B, 2·P·H·W) array (ignored without the maps source)
            geo: (B, 6·P·P) array (ignored without the geo source)

        Returns:
            (B,) scores in (0, 1)
        """
        arrays = {IMAGE: images, MAPS: maps, GEO: geo}
        embeddings = [self.branches[source].forward(arrays[source]) for source in self.source_set]
        scores = self.head.forward(np.concatenate(embeddings, axis=1))
        self._batch = scores.shape[0]
        return scores[:, 0]

    def forward(self, images, inputs):
        """
        Score a batch of images with their DiscriminatorInputs.

        Args:
            images: (B, H_img, W_img) images
            inputs: List of B DiscriminatorInput

        Returns:
            (B,) scores in (0, 1)

        Raises:
            ShapeMismatchError: If images and inputs disagree in count or size
        """
        images = np.asarray(images, dtype=np.float64)
        if images.shape[0] != len(inputs):
            raise ShapeMismatchError(f"{images.shape[0]} images but {len(inputs)} encodings")
        flat = images.reshape(images.shape[0], -1)
        if self.has_source(IMAGE) and flat.shape[1] != self.branches[IMAGE].input_width:
            raise ShapeMismatchError(f"Discriminator expects {self.config.image_size} images, got {images.shape[1:]}")
        for item in inputs:
            if item.heatmaps.values.shape != self.map_shape:
                raise ShapeMismatchError(f"Discriminator expects {self.map_shape} maps, "
                                         f"got {item.heatmaps.values.shape}")
        maps, geo = network_arrays(inputs)
        return self.forward_arrays(flat, maps, geo)

    def backward_arrays(self, grad_scores):
        """
        Backpropagate d loss / d score.

        Returns:
            Dict source -> gradient w.r.t. that source's flattened input
        """
        if self._batch is None:
            raise NoForwardRecordedError("Discriminator backward() called before forward()")
        grad = np.asarray(grad_scores, dtype=np.float64).reshape(self._batch, 1)
        grad_embeddings = self.head.backward(grad)
        width = self.config.embed_width
        gradients = {}
        for position, source in enumerate(self.source_set):
            chunk = grad_embeddings[:, position * width:(position + 1) * width]
            gradients[source] = self.branches[source].backward(chunk)
        return gradients

    def backward(self, grad_scores):
        """
        Backpropagate d loss / d score into parameters and pose encodings.

        Returns:
            List of InputGradient, one per batch row (zero for disabled sources)
        """
        gradients = self.backward_arrays(grad_scores)
        grad_maps = gradients.get(MAPS)
        if grad_maps is None and GEO not in gradients:
            # image-only: encodings receive nothing
            grad_maps = np.zeros((self._batch, 2 * int(np.prod(self.map_shape))))
        return input_gradients(grad_maps, gradients.get(GEO), self.map_shape)

    def state_dict(self):
        state = {}
        for tensor in self.parameters():
            state[tensor.name] = tensor.value
        return state

    def load_state_dict(self, state):
        for source in self.source_set:
            self.branches[source].load_state_dict(state)
        self.head.load_state_dict(state)
        self._batch = None


def d_forward(model, images, inputs):
    """Functional alias of DiscriminatorModel.forward."""
    return model.forward(images, inputs)
