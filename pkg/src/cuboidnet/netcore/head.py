"""R-CNN head: two fully connected layers and three linear outputs
(cuboidness logits, box deltas, vertex offsets)."""

import numpy as np

from ..errors import ShapeMismatch

DROPOUT = 0.5
OUTPUTS = (("cls", 2), ("box", 4), ("vert", 16))


def init_head_params(in_dim, hidden, rng, out_std=0.01):
    p = {
        "fc1_w": rng.normal(0.0, np.sqrt(2.0 / in_dim), (in_dim, hidden)),
        "fc1_b": np.zeros(hidden),
        "fc2_w": rng.normal(0.0, np.sqrt(2.0 / hidden), (hidden, hidden)),
        "fc2_b": np.zeros(hidden),
    }
    for name, width in OUTPUTS:
        p[f"{name}_w"] = rng.normal(0.0, out_std, (hidden, width))
        p[f"{name}_b"] = np.zeros(width)
    return p


def draw_dropout_masks(rng, n, hidden, rate=DROPOUT):
    """Inverted-dropout masks for the two hidden layers, ``(2, n, hidden)``."""
    keep = rng.random((2, n, hidden)) >= rate
    return keep / (1.0 - rate)


def head_forward(pooled, params, train=False, dropout_mask=None, rng=None, dropout=DROPOUT):
    """Run the head on ``([R,] 7, 7, C)`` pooled features.

    In training mode a dropout mask is used (drawn from ``rng`` if not
    given); evaluation mode is deterministic. Returns
    ``(cls_logits, box_deltas, vertex_offsets, cache)``.
    """
    x = np.asarray(pooled, dtype=float)
    single = x.ndim == 3
    x = x.reshape(1 if single else x.shape[0], -1)
    if x.shape[1] != params["fc1_w"].shape[0]:
        raise ShapeMismatch(f"pooled size {x.shape[1]} != FC1 input {params['fc1_w'].shape[0]}")
    hidden = params["fc1_w"].shape[1]
    if train and dropout_mask is None and dropout > 0:
        if rng is None:
            raise ValueError("training mode needs a dropout mask or an rng")
        dropout_mask = draw_dropout_masks(rng, x.shape[0], hidden, dropout)
    if not train:
        dropout_mask = None

    z1 = x @ params["fc1_w"] + params["fc1_b"]
    a1 = np.maximum(z1, 0.0)
    if dropout_mask is not None:
        a1 = a1 * dropout_mask[0]
    z2 = a1 @ params["fc2_w"] + params["fc2_b"]
    a2 = np.maximum(z2, 0.0)
    if dropout_mask is not None:
        a2 = a2 * dropout_mask[1]
    outs = [a2 @ params[f"{name}_w"] + params[f"{name}_b"] for name, _ in OUTPUTS]
    cache = (np.asarray(pooled).shape, x, z1, a1, z2, a2, dropout_mask)
    if single:
        outs = [o[0] for o in outs]
    return (*outs, cache)


def head_backward(cache, d_cls, d_box, d_vert, params):
    """Parameter gradients plus ``"input"``, the gradient w.r.t. the pooled features."""
    in_shape, x, z1, a1, z2, a2, mask = cache
    n = x.shape[0]
    grads = {}
    da2 = np.zeros_like(a2)
    for (name, width), d in zip(OUTPUTS, (d_cls, d_box, d_vert)):
        d = np.asarray(d, dtype=float).reshape(n, width)
        grads[f"{name}_w"] = a2.T @ d
        grads[f"{name}_b"] = d.sum(axis=0)
        da2 += d @ params[f"{name}_w"].T
    if mask is not None:
        da2 = da2 * mask[1]
    dz2 = da2 * (z2 > 0)
    grads["fc2_w"] = a1.T @ dz2
    grads["fc2_b"] = dz2.sum(axis=0)
    da1 = dz2 @ params["fc2_w"].T
    if mask is not None:
        da1 = da1 * mask[0]
    dz1 = da1 * (z1 > 0)
    grads["fc1_w"] = x.T @ dz1
    grads["fc1_b"] = dz1.sum(axis=0)
    grads["input"] = (dz1 @ params["fc1_w"].T).reshape(in_shape)
    return grads
