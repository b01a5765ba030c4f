"""Anchor tiling and anchor-to-ground-truth target assignment."""

import numpy as np

from ..encoding import encode_box
from ..metrics import iou_matrix

POSITIVE, NEGATIVE, IGNORE = 1, 0, -1


def anchor_shapes(scales, ratios):
    """``(K, 2)`` widths and heights; ratio is height / width, area is ``scale**2``."""
    if len(scales) == 0 or len(ratios) == 0:
        raise ValueError("need at least one scale and one ratio")
    shapes = []
    for s in scales:
        for r in ratios:
            shapes.append((s / np.sqrt(r), s * np.sqrt(r)))
    return np.array(shapes, dtype=float)


def generate_anchors(height, width, stride, scales, ratios):
    """``(height * width * K, 4)`` anchors, row-major over cells with K innermost.

    ``height``/``width`` are the feature grid size; anchors are centered on
    the image-space centers of the cells.
    """
    wh = anchor_shapes(scales, ratios)
    ys = (np.arange(height) + 0.5) * stride
    xs = (np.arange(width) + 0.5) * stride
    cy, cx = np.meshgrid(ys, xs, indexing="ij")
    centers = np.stack([cx, cy], axis=-1).reshape(-1, 1, 2)
    half = 0.5 * wh[None]
    boxes = np.concatenate([centers - half, centers + half], axis=-1)
    return boxes.reshape(-1, 4)


def anchors_for(fm, scales, ratios):
    return generate_anchors(fm.height, fm.width, fm.stride, scales, ratios)


def assign_anchor_targets(anchors, gt_boxes, pos_thresh=0.7, neg_thresh=0.3):
    """Label anchors POSITIVE / NEGATIVE / IGNORE and compute deltas for positives.

    An anchor is positive if it overlaps some ground-truth box by at least
    ``pos_thresh``, or if it is (one of) the best anchors for some ground
    truth box. It is negative if its best overlap is at most ``neg_thresh``.
    Positives regress toward their highest-overlap box. Returns
    ``(labels, deltas, gt_index)``; deltas are zero for non-positives.
    """
    n = len(anchors)
    labels = np.full(n, IGNORE, dtype=int)
    deltas = np.zeros((n, 4))
    gt_index = np.full(n, -1, dtype=int)
    gt_boxes = np.asarray(gt_boxes, dtype=float).reshape(-1, 4)
    if len(gt_boxes) == 0:
        labels[:] = NEGATIVE
        return labels, deltas, gt_index

    ious = iou_matrix(anchors, gt_boxes)
    best_gt = ious.argmax(axis=1)
    best_iou = ious[np.arange(n), best_gt]
    labels[best_iou <= neg_thresh] = NEGATIVE

    per_gt_best = ious.max(axis=0)
    for g in range(len(gt_boxes)):
        if per_gt_best[g] <= 0:
            continue
        labels[ious[:, g] == per_gt_best[g]] = POSITIVE
    labels[best_iou >= pos_thresh] = POSITIVE

    pos = labels == POSITIVE
    gt_index[pos] = best_gt[pos]
    deltas[pos] = encode_box(gt_boxes[best_gt[pos]], anchors[pos])
    return labels, deltas, gt_index
