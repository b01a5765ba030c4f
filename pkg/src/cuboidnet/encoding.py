"""Regression targets relative to a region of interest.

Vertex offsets are ``((x - xc) / w, (y - yc) / h)`` per vertex, flattened to
16 numbers. Box deltas follow the usual ``(dx, dy, log dw, log dh)`` form.
Everything broadcasts over leading batch dimensions.
"""

import numpy as np


def box_center_size(box):
    box = np.asarray(box, dtype=float)
    w = box[..., 2] - box[..., 0]
    h = box[..., 3] - box[..., 1]
    cx = box[..., 0] + 0.5 * w
    cy = box[..., 1] + 0.5 * h
    return cx, cy, w, h


def box_from_center_size(cx, cy, w, h):
    return np.stack([cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h], axis=-1)


def encode_vertices(cuboid, roi):
    """``(..., 8, 2)`` vertices and ``(..., 4)`` RoIs -> ``(..., 16)`` offsets."""
    v = np.asarray(cuboid, dtype=float)
    cx, cy, w, h = box_center_size(roi)
    tx = (v[..., 0] - cx[..., None]) / w[..., None]
    ty = (v[..., 1] - cy[..., None]) / h[..., None]
    return np.stack([tx, ty], axis=-1).reshape(v.shape[:-2] + (16,))


def decode_vertices(offsets, roi):
    t = np.asarray(offsets, dtype=float)
    t = t.reshape(t.shape[:-1] + (8, 2))
    cx, cy, w, h = box_center_size(roi)
    x = t[..., 0] * w[..., None] + cx[..., None]
    y = t[..., 1] * h[..., None] + cy[..., None]
    return np.stack([x, y], axis=-1)


def encode_box(gt, ref):
    gx, gy, gw, gh = box_center_size(gt)
    rx, ry, rw, rh = box_center_size(ref)
    return np.stack([(gx - rx) / rw, (gy - ry) / rh, np.log(gw / rw), np.log(gh / rh)], axis=-1)


def decode_box(deltas, ref):
    d = np.asarray(deltas, dtype=float)
    rx, ry, rw, rh = box_center_size(ref)
    return box_from_center_size(
        d[..., 0] * rw + rx,
        d[..., 1] * rh + ry,
        np.exp(d[..., 2]) * rw,
        np.exp(d[..., 3]) * rh,
    )


MAX_LOG_SCALE = np.log(1000.0 / 16.0)


def clip_deltas(deltas, max_log_scale=MAX_LOG_SCALE):
    """Cap the log-size components so untrained outputs cannot overflow ``exp``."""
    d = np.array(deltas, dtype=float)
    d[..., 2:] = np.minimum(d[..., 2:], max_log_scale)
    return d
