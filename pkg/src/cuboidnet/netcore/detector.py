"""Inference: features -> RPN -> proposals -> (iterated) head -> NMS."""

from dataclasses import dataclass

import numpy as np

from ..refine import DEFAULT_ITERS, refine_boxes
from .features import toy_feature_extractor
from .proposals import nms, propose
from .rpn import rpn_forward


@dataclass
class Detection:
    score: float
    box: np.ndarray
    cuboid: np.ndarray

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must lie in [0, 1], got {self.score}")


def detect(image, model, score_thresh=0.5, nms_thresh=0.3, refine_iters=DEFAULT_ITERS,
           pre_nms=300, post_nms=50, rpn_nms=0.7):
    """Detections sorted by descending score."""
    fm = toy_feature_extractor(image, model.config.stride)
    logits, deltas, _ = rpn_forward(fm.values, model.rpn)
    anchors = model.config.anchors(np.shape(image))
    proposals, _ = propose(logits, deltas, anchors, np.shape(image), pre_nms, post_nms, rpn_nms)
    if len(proposals) == 0:
        return []
    boxes, cuboids, scores, n_valid = refine_boxes(fm, model.head, proposals, refine_iters, model.config.snap_rois)
    ok = n_valid > 0
    boxes, cuboids, scores = boxes[-1][ok], cuboids[-1][ok], scores[-1][ok]
    keep = scores >= score_thresh
    boxes, cuboids, scores = boxes[keep], cuboids[keep], scores[keep]
    order = nms(boxes, scores, nms_thresh)
    return [Detection(float(scores[i]), boxes[i], cuboids[i]) for i in order]


def predict_on_boxes(image, model, boxes, refine_iters=DEFAULT_ITERS):
    """Run the head on given boxes (e.g. ground truth, for PCK); returns final cuboids ``(R, 8, 2)``."""
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 4)
    if len(boxes) == 0:
        return np.zeros((0, 8, 2))
    fm = toy_feature_extractor(image, model.config.stride)
    _, cuboids, _, _ = refine_boxes(fm, model.head, boxes, refine_iters, model.config.snap_rois)
    return cuboids[-1]
