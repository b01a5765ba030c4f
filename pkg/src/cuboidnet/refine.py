"""Iterative feature pooling: re-pool from the regressed box and run the head again."""

from dataclasses import dataclass

import numpy as np

from .encoding import clip_deltas, decode_box, decode_vertices
from .losses import softmax
from .netcore.head import head_forward
from .netcore.proposals import clip_boxes
from .netcore.roi import pooled_region, roi_pool

DEFAULT_ITERS = 2
MIN_AREA = 1.0


@dataclass
class Iterate:
    box: np.ndarray
    cuboid: np.ndarray
    score: float


def _step(fm, head, boxes, snap=False):
    h, w = fm.height * fm.stride, fm.width * fm.stride
    pooled, _ = roi_pool(fm.values, boxes, fm.stride)
    # outputs are relative to the box the features were pooled from
    ref = pooled_region(boxes, fm.stride, fm.height, fm.width) if snap else boxes
    if callable(head):
        cls, deltas, offsets = head(pooled, ref)
    else:
        cls, deltas, offsets, _ = head_forward(pooled, head)
    new_boxes = clip_boxes(decode_box(clip_deltas(deltas), ref), w, h)
    cuboids = decode_vertices(offsets, ref)
    return new_boxes, cuboids, softmax(cls)[:, 1]


def _area(boxes):
    return np.clip(boxes[..., 2] - boxes[..., 0], 0, None) * np.clip(boxes[..., 3] - boxes[..., 1], 0, None)


def refine_boxes(fm, head, boxes, iters=DEFAULT_ITERS, snap=False):
    """Batched refinement of ``(R, 4)`` boxes.

    ``head`` is a head parameter dict, or any callable
    ``(pooled, reference_boxes) -> (cls_logits, box_deltas, vertex_offsets)``
    (handy for stubs). With ``snap`` the reference boxes are the cell-aligned
    regions actually pooled; otherwise the boxes themselves.

    Returns ``(boxes, cuboids, scores, n_valid)`` with leading iteration axis
    ``iters``. ``n_valid[r]`` counts the usable iterates for box ``r``; once
    a box degenerates its later entries repeat the last valid iterate.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    h, w = fm.height * fm.stride, fm.width * fm.stride
    current = clip_boxes(np.asarray(boxes, dtype=float).reshape(-1, 4), w, h)
    r = len(current)
    out_boxes = np.zeros((iters, r, 4))
    out_cuboids = np.zeros((iters, r, 8, 2))
    out_scores = np.zeros((iters, r))
    n_valid = np.zeros(r, dtype=int)
    alive = np.ones(r, dtype=bool)
    for k in range(iters):
        if alive.any():
            idx = np.flatnonzero(alive)
            nb, nc, ns = _step(fm, head, current[idx], snap)
            bad = _area(nb) < MIN_AREA
            good = idx[~bad]
            out_boxes[k, good] = nb[~bad]
            out_cuboids[k, good] = nc[~bad]
            out_scores[k, good] = ns[~bad]
            n_valid[good] += 1
            current[good] = nb[~bad]
            alive[idx[bad]] = False
        dead = ~alive
        if k > 0 and dead.any():
            out_boxes[k, dead] = out_boxes[k - 1, dead]
            out_cuboids[k, dead] = out_cuboids[k - 1, dead]
            out_scores[k, dead] = out_scores[k - 1, dead]
    return out_boxes, out_cuboids, out_scores, n_valid


def refine_detection(fm, head, box0, iters=DEFAULT_ITERS, snap=False):
    """Refine one box; returns ``(iterates, degenerate)``.

    The list holds one :class:`Iterate` per completed pass; if a regressed
    box collapses below one square pixel, iteration stops there and
    ``degenerate`` is True.
    """
    boxes, cuboids, scores, n_valid = refine_boxes(fm, head, np.asarray(box0)[None], iters, snap)
    n = int(n_valid[0])
    its = [Iterate(boxes[k, 0], cuboids[k, 0], float(scores[k, 0])) for k in range(n)]
    return its, n < iters
