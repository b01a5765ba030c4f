"""Region proposal network: 3x3 conv + ReLU, then 1x1 objectness and delta maps."""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ShapeMismatch


def init_rpn_params(in_channels, hidden, num_anchors, rng, std=0.01):
    fan_in = 9 * in_channels
    return {
        "conv_w": rng.normal(0.0, np.sqrt(2.0 / fan_in), (3, 3, in_channels, hidden)),
        "conv_b": np.zeros(hidden),
        "cls_w": rng.normal(0.0, std, (hidden, 2 * num_anchors)),
        "cls_b": np.zeros(2 * num_anchors),
        "reg_w": rng.normal(0.0, std, (hidden, 4 * num_anchors)),
        "reg_b": np.zeros(4 * num_anchors),
    }


def num_anchors(params):
    return params["cls_w"].shape[1] // 2


def _im2col(x):
    h, w, c = x.shape
    padded = np.pad(x, ((1, 1), (1, 1), (0, 0)))
    win = sliding_window_view(padded, (3, 3), axis=(0, 1))  # (H, W, C, 3, 3)
    return win.transpose(0, 1, 3, 4, 2).reshape(h * w, 9 * c)


def _col2im(dcols, h, w, c):
    d = dcols.reshape(h, w, 3, 3, c)
    dpad = np.zeros((h + 2, w + 2, c))
    for di in range(3):
        for dj in range(3):
            dpad[di:di + h, dj:dj + w] += d[:, :, di, dj]
    return dpad[1:-1, 1:-1]


def rpn_forward(features, params):
    """Returns objectness logits ``(H, W, 2K)``, deltas ``(H, W, 4K)`` and a cache.

    For anchor ``k`` the logits are ``[..., 2k:2k+2]`` = (background, cuboid)
    and the deltas ``[..., 4k:4k+4]``.
    """
    x = np.asarray(features, dtype=float)
    h, w, c = x.shape
    kh, kw, cin, hidden = params["conv_w"].shape
    if (kh, kw) != (3, 3) or cin != c:
        raise ShapeMismatch(f"conv weights {params['conv_w'].shape} vs features with {c} channels")
    if params["cls_w"].shape[0] != hidden or params["reg_w"].shape[0] != hidden:
        raise ShapeMismatch("1x1 heads disagree with the conv width")
    if params["reg_w"].shape[1] != 2 * params["cls_w"].shape[1]:
        raise ShapeMismatch("delta head must have 4K outputs for 2K objectness outputs")
    cols = _im2col(x)
    z = cols @ params["conv_w"].reshape(9 * c, hidden) + params["conv_b"]
    a = np.maximum(z, 0.0)
    logits = a @ params["cls_w"] + params["cls_b"]
    deltas = a @ params["reg_w"] + params["reg_b"]
    cache = (x.shape, cols, z, a)
    return logits.reshape(h, w, -1), deltas.reshape(h, w, -1), cache


def rpn_backward(cache, d_logits, d_deltas, params):
    """Gradients for every parameter plus ``"input"`` (w.r.t. the feature map)."""
    (h, w, c), cols, z, a = cache
    hidden = z.shape[1]
    dl = np.asarray(d_logits, dtype=float).reshape(h * w, -1)
    dd = np.asarray(d_deltas, dtype=float).reshape(h * w, -1)
    grads = {
        "cls_w": a.T @ dl,
        "cls_b": dl.sum(axis=0),
        "reg_w": a.T @ dd,
        "reg_b": dd.sum(axis=0),
    }
    da = dl @ params["cls_w"].T + dd @ params["reg_w"].T
    dz = da * (z > 0)
    grads["conv_w"] = (cols.T @ dz).reshape(3, 3, c, hidden)
    grads["conv_b"] = dz.sum(axis=0)
    grads["input"] = _col2im(dz @ params["conv_w"].reshape(9 * c, hidden).T, h, w, c)
    return grads
