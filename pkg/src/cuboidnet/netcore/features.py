"""Fixed, non-trainable feature extractor standing in for a CNN tower."""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import BadDimensions

N_ORIENTATIONS = 8
CHANNELS = N_ORIENTATIONS + 1

_SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]]) / 4.0
_SOBEL_Y = _SOBEL_X.T


def edge_filters(n=N_ORIENTATIONS):
    """Steered Sobel kernels, ``(n, 3, 3)``; filter ``i`` responds to an
    intensity increase along angle ``2*pi*i/n`` (0 = +x, i.e. a vertical edge)."""
    angles = 2 * np.pi * np.arange(n) / n
    return np.cos(angles)[:, None, None] * _SOBEL_X + np.sin(angles)[:, None, None] * _SOBEL_Y


@dataclass
class FeatureMap:
    """``values`` has shape ``(H, W, C)``; one cell covers ``stride`` pixels."""

    values: np.ndarray
    stride: int

    def __post_init__(self):
        if self.stride <= 0:
            raise ValueError("stride must be positive")
        if self.values.ndim != 3:
            raise ValueError(f"feature values must be (H, W, C), got {self.values.shape}")

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def channels(self):
        return self.values.shape[2]


def edge_responses(image):
    """Half-wave rectified oriented edge responses at full resolution, ``(H, W, 8)``.

    The border is replicated so flat images give exactly zero response.
    """
    padded = np.pad(image, 1, mode="edge")
    windows = sliding_window_view(padded, (3, 3))
    return np.maximum(np.einsum("hwij,kij->hwk", windows, edge_filters()), 0.0)


def toy_feature_extractor(image, stride=4):
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise BadDimensions(f"expected a 2D grayscale image, got shape {image.shape}")
    h, w = image.shape
    if h % stride or w % stride or h == 0 or w == 0:
        raise BadDimensions(f"image size {h}x{w} is not divisible by stride {stride}")
    full = np.concatenate([edge_responses(image), image[..., None]], axis=2)
    pooled = full.reshape(h // stride, stride, w // stride, stride, CHANNELS).mean(axis=(1, 3))
    return FeatureMap(pooled, stride)
