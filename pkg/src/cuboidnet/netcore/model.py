"""Model configuration and parameter containers."""

from dataclasses import asdict, dataclass, field
from typing import Tuple

import numpy as np

from .anchors import generate_anchors
from .features import CHANNELS
from .head import init_head_params
from .roi import POOL_SIZE, pooled_region
from .rpn import init_rpn_params


@dataclass
class ModelConfig:
    stride: int = 4
    anchor_scales: Tuple[float, ...] = (16.0, 24.0, 32.0)
    anchor_ratios: Tuple[float, ...] = (0.5, 1.0, 2.0)
    rpn_hidden: int = 32
    fc_hidden: int = 64
    # encode targets relative to the cell-aligned pooled region instead of the raw RoI
    snap_rois: bool = True

    def __post_init__(self):
        self.anchor_scales = tuple(float(s) for s in self.anchor_scales)
        self.anchor_ratios = tuple(float(r) for r in self.anchor_ratios)

    @property
    def num_anchors(self):
        return len(self.anchor_scales) * len(self.anchor_ratios)

    @property
    def pooled_dim(self):
        return POOL_SIZE * POOL_SIZE * CHANNELS

    def anchors(self, image_size):
        h, w = image_size
        return generate_anchors(h // self.stride, w // self.stride, self.stride,
                                self.anchor_scales, self.anchor_ratios)

    def as_dict(self):
        return asdict(self)

    def reference_boxes(self, rois, image_size):
        """Boxes that regression targets are expressed against."""
        if not self.snap_rois:
            return np.asarray(rois, dtype=float)
        h, w = image_size
        return pooled_region(rois, self.stride, h // self.stride, w // self.stride)


@dataclass
class Model:
    config: ModelConfig
    rpn: dict = field(default_factory=dict)
    head: dict = field(default_factory=dict)

    def blocks(self):
        """``(name, array)`` pairs in a fixed order."""
        out = [(f"rpn.{k}", self.rpn[k]) for k in sorted(self.rpn)]
        out += [(f"head.{k}", self.head[k]) for k in sorted(self.head)]
        return out

    def expected_shapes(self):
        ref = init_model(self.config, np.random.default_rng(0))
        return {name: a.shape for name, a in ref.blocks()}


def init_model(config, rng):
    rpn = init_rpn_params(CHANNELS, config.rpn_hidden, config.num_anchors, rng)
    head = init_head_params(config.pooled_dim, config.fc_hidden, rng)
    return Model(config, rpn, head)
