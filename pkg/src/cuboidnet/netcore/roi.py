"""RoI max pooling to a fixed 7x7 grid, with its backward pass."""

import numpy as np

from ..errors import EmptyRoi

POOL_SIZE = 7


def roi_bins(roi, stride, height, width, pool=POOL_SIZE):
    """Half-open cell ranges ``(rows, cols)``, each ``(pool, 2)``, for one RoI.

    The RoI spans cells ``floor(x1 / stride)`` up to ``ceil(x2 / stride)``
    (exclusive), clipped to the grid; bin edges are rounded and every bin
    keeps at least one cell.
    """
    x1, y1, x2, y2 = (float(v) for v in roi)
    ranges = []
    for lo_c, hi_c, size in ((y1, y2, height), (x1, x2, width)):
        start = min(max(int(np.floor(lo_c / stride)), 0), size)
        end = min(max(int(np.ceil(hi_c / stride)), 0), size)
        if end <= start:
            raise EmptyRoi(f"RoI {tuple(roi)} does not overlap the {height}x{width} feature grid")
        n = end - start
        b = np.arange(pool)
        lo = start + np.floor(b * n / pool + 0.5).astype(int)
        hi = start + np.floor((b + 1) * n / pool + 0.5).astype(int)
        hi = np.maximum(hi, lo + 1)
        over = hi > end
        hi[over] = end
        lo[over] = end - 1
        ranges.append(np.stack([lo, hi], axis=1))
    return ranges[0], ranges[1]


def pooled_region(rois, stride, height, width):
    """The cell-aligned image rectangle that :func:`roi_pool` actually reads, per RoI."""
    rois = np.asarray(rois, dtype=float)
    start_x = np.clip(np.floor(rois[..., 0] / stride), 0, width)
    start_y = np.clip(np.floor(rois[..., 1] / stride), 0, height)
    end_x = np.clip(np.ceil(rois[..., 2] / stride), 0, width)
    end_y = np.clip(np.ceil(rois[..., 3] / stride), 0, height)
    return np.stack([start_x, start_y, end_x, end_y], axis=-1) * stride


def roi_pool(values, rois, stride, pool=POOL_SIZE):
    """Max-pool ``values`` ``(H, W, C)`` inside each RoI.

    ``rois`` is ``(4,)`` or ``(R, 4)`` in image pixels. Returns pooled
    features ``([R,] pool, pool, C)`` and the flat ``h * W + w`` index of each
    maximum, same shape, for the backward pass.
    """
    values = np.asarray(values, dtype=float)
    rois = np.asarray(rois, dtype=float)
    single = rois.ndim == 1
    rois = rois.reshape(-1, 4)
    h, w, c = values.shape
    r = len(rois)
    row_mask = np.zeros((r, pool, h), dtype=bool)
    col_mask = np.zeros((r, pool, w), dtype=bool)
    hs, ws = np.arange(h), np.arange(w)
    for i, roi in enumerate(rois):
        rows, cols = roi_bins(roi, stride, h, w, pool)
        row_mask[i] = (hs >= rows[:, :1]) & (hs < rows[:, 1:])
        col_mask[i] = (ws >= cols[:, :1]) & (ws < cols[:, 1:])

    # separable max: rows first, then columns
    stage1 = np.where(row_mask[:, :, :, None, None], values[None, None], -np.inf)
    best_row = stage1.argmax(axis=2)  # (R, P, W, C)
    row_max = np.take_along_axis(stage1, best_row[:, :, None], axis=2)[:, :, 0]
    stage2 = np.where(col_mask[:, None, :, :, None], row_max[:, :, None], -np.inf)
    best_col = stage2.argmax(axis=3)  # (R, P, P, C)
    pooled = np.take_along_axis(stage2, best_col[:, :, :, None], axis=3)[:, :, :, 0]
    rows_at = np.take_along_axis(best_row[:, :, None], best_col[:, :, :, None], axis=3)[:, :, :, 0]
    argmax = rows_at * w + best_col
    if single:
        return pooled[0], argmax[0]
    return pooled, argmax


def roi_pool_backward(argmax, d_pooled, shape):
    """Route each pooled gradient to its argmax cell; overlapping RoIs accumulate."""
    h, w, c = shape
    argmax = np.asarray(argmax).reshape(-1, c)
    d = np.asarray(d_pooled, dtype=float).reshape(-1, c)
    grad = np.zeros((h * w, c))
    channels = np.broadcast_to(np.arange(c), argmax.shape)
    np.add.at(grad, (argmax, channels), d)
    return grad.reshape(h, w, c)
