"""Non-maximum suppression and RPN proposal generation."""

import numpy as np

from ..encoding import clip_deltas, decode_box
from ..losses import softmax
from ..metrics import iou_matrix


def nms(boxes, scores, iou_thresh):
    """Indices of kept boxes, highest score first; ties keep input order."""
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 4)
    order = np.argsort(-np.asarray(scores, dtype=float), kind="stable")
    if len(order) == 0:
        return order
    ious = iou_matrix(boxes[order], boxes[order])
    suppressed = np.zeros(len(order), dtype=bool)
    keep = []
    for i in range(len(order)):
        if suppressed[i]:
            continue
        keep.append(order[i])
        suppressed |= ious[i] >= iou_thresh
    return np.array(keep, dtype=int)


def clip_boxes(boxes, width, height):
    boxes = np.array(boxes, dtype=float)
    boxes[..., 0::2] = np.clip(boxes[..., 0::2], 0, width)
    boxes[..., 1::2] = np.clip(boxes[..., 1::2], 0, height)
    return boxes


def objectness(logits):
    """Cuboid probability per anchor from ``(..., 2K)`` logits, flattened to ``(A,)``."""
    return softmax(np.asarray(logits).reshape(-1, 2))[:, 1]


def propose(logits, deltas, anchors, image_size, pre_nms_n=300, post_nms_n=50,
            iou_thresh=0.7, min_size=1.0):
    """Decode anchors, clip, rank by objectness and suppress duplicates.

    Returns ``(boxes, scores)``. Boxes narrower or shorter than ``min_size``
    after clipping are dropped.
    """
    height, width = image_size
    scores = objectness(logits)
    boxes = clip_boxes(decode_box(clip_deltas(np.asarray(deltas).reshape(-1, 4)), anchors), width, height)
    ok = ((boxes[:, 2] - boxes[:, 0]) >= min_size) & ((boxes[:, 3] - boxes[:, 1]) >= min_size)
    boxes, scores = boxes[ok], scores[ok]
    order = np.argsort(-scores, kind="stable")[:pre_nms_n]
    boxes, scores = boxes[order], scores[order]
    keep = nms(boxes, scores, iou_thresh)[:post_nms_n]
    return boxes[keep], scores[keep]
