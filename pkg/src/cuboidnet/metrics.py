"""Detection and keypoint metrics: IoU, AP, PR curves, PCK, APK, face-wise PCK.

Detections and ground truth are given per image. A detection is any object
with ``score``, ``box`` and ``cuboid`` attributes; ground truth for one
image is a list of ``(box, cuboid)`` pairs.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import CountMismatch
from .geometry import FACES

IOU_THRESHOLD = 0.5
ALPHA = 0.1


def iou(a, b):
    ix = min(a[2], b[2]) - max(a[0], b[0])
    iy = min(a[3], b[3]) - max(a[1], b[1])
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = (a[2] - a[0]) * (a[3] - a[1]) + (b[2] - b[0]) * (b[3] - b[1]) - inter
    return float(inter / union)


def iou_matrix(a, b):
    """Pairwise IoU between ``(N, 4)`` and ``(M, 4)`` box arrays."""
    a = np.asarray(a, dtype=float).reshape(-1, 4)
    b = np.asarray(b, dtype=float).reshape(-1, 4)
    ix = np.minimum(a[:, None, 2], b[None, :, 2]) - np.maximum(a[:, None, 0], b[None, :, 0])
    iy = np.minimum(a[:, None, 3], b[None, :, 3]) - np.maximum(a[:, None, 1], b[None, :, 1])
    inter = np.clip(ix, 0, None) * np.clip(iy, 0, None)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a[:, None] + area_b[None, :] - inter
    return np.where(inter > 0, inter / np.where(union > 0, union, 1.0), 0.0)


def _rank(scores):
    # stable: equal scores keep input order
    return np.argsort(-np.asarray(scores, dtype=float), kind="stable")


def match_detections(boxes, scores, gt_boxes, iou_thresh=IOU_THRESHOLD):
    """Greedy one-to-one matching for one image, in descending score order.

    Each detection looks at the ground-truth box it overlaps most; it is a
    true positive if that overlap exceeds ``iou_thresh`` and the box is still
    unclaimed. Returns ``(tp, matched_gt)`` indexed like the input, with
    ``matched_gt[i] == -1`` for false positives.
    """
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 4)
    n = len(boxes)
    tp = np.zeros(n, dtype=bool)
    matched = np.full(n, -1)
    if n == 0 or len(gt_boxes) == 0:
        return tp, matched
    ious = iou_matrix(boxes, gt_boxes)
    taken = np.zeros(len(gt_boxes), dtype=bool)
    for i in _rank(scores):
        j = int(np.argmax(ious[i]))
        if ious[i, j] > iou_thresh and not taken[j]:
            taken[j] = True
            tp[i] = True
            matched[i] = j
    return tp, matched


def _precision_recall(tp_sorted, n_gt):
    tp_cum = np.cumsum(tp_sorted)
    fp_cum = np.cumsum(~tp_sorted)
    recall = tp_cum / n_gt if n_gt > 0 else np.zeros(len(tp_sorted))
    precision = tp_cum / np.maximum(tp_cum + fp_cum, 1)
    return recall, precision


def average_precision(tp, n_gt, scores=None):
    """Area under the precision envelope (all-point interpolation).

    ``tp`` is the per-detection TP flag; if ``scores`` is given the flags are
    ranked by it, otherwise they are taken to be in rank order already.
    """
    tp = np.asarray(tp, dtype=bool)
    if scores is not None:
        tp = tp[_rank(scores)]
    if n_gt == 0 or len(tp) == 0:
        return 0.0
    recall, precision = _precision_recall(tp, n_gt)
    mrec = np.concatenate([[0.0], recall])
    mpre = np.concatenate([[0.0], precision])
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    return float(np.sum((mrec[1:] - mrec[:-1]) * mpre[1:]))


@dataclass
class PrCurve:
    recall: np.ndarray
    precision: np.ndarray
    thresholds: np.ndarray


def pr_curve(tp, n_gt, scores):
    """One (recall, precision) point per distinct score threshold."""
    order = _rank(scores)
    tp = np.asarray(tp, dtype=bool)[order]
    s = np.asarray(scores, dtype=float)[order]
    recall, precision = _precision_recall(tp, n_gt)
    if len(s) == 0:
        return PrCurve(np.zeros(0), np.zeros(0), np.zeros(0))
    last_of_group = np.r_[s[1:] != s[:-1], True]
    return PrCurve(recall[last_of_group], precision[last_of_group], s[last_of_group])


# --- pooled multi-image evaluation -----------------------------------------


def _gt_arrays(gt_image):
    if len(gt_image) == 0:
        return np.zeros((0, 4)), np.zeros((0, 8, 2))
    boxes = np.array([np.asarray(b, dtype=float) for b, _ in gt_image])
    cuboids = np.array([np.asarray(c, dtype=float) for _, c in gt_image])
    return boxes, cuboids


def keypoint_thresholds(gt_boxes, alpha=ALPHA):
    gt_boxes = np.asarray(gt_boxes, dtype=float).reshape(-1, 4)
    return alpha * np.maximum(gt_boxes[:, 2] - gt_boxes[:, 0], gt_boxes[:, 3] - gt_boxes[:, 1])


def _pool(detections, ground_truth, iou_thresh, alpha=ALPHA):
    """Match every image; return pooled scores, TP flags, and per-detection keypoint hits."""
    if len(detections) != len(ground_truth):
        raise CountMismatch(f"{len(detections)} detection lists for {len(ground_truth)} images")
    scores, tps, kp_hits = [], [], []
    n_gt = 0
    for dets, gts in zip(detections, ground_truth):
        gt_boxes, gt_cuboids = _gt_arrays(gts)
        n_gt += len(gt_boxes)
        if not dets:
            continue
        boxes = np.array([d.box for d in dets], dtype=float)
        s = np.array([d.score for d in dets], dtype=float)
        tp, matched = match_detections(boxes, s, gt_boxes, iou_thresh)
        hits = np.zeros((len(dets), 8), dtype=bool)
        if tp.any():
            thr = keypoint_thresholds(gt_boxes, alpha)
            for i in np.flatnonzero(tp):
                j = matched[i]
                dist = np.linalg.norm(np.asarray(dets[i].cuboid) - gt_cuboids[j], axis=1)
                hits[i] = dist <= thr[j]
        scores.append(s)
        tps.append(tp)
        kp_hits.append(hits)
    if scores:
        return np.concatenate(scores), np.concatenate(tps), np.concatenate(kp_hits), n_gt
    return np.zeros(0), np.zeros(0, bool), np.zeros((0, 8), bool), n_gt


def detection_ap(detections, ground_truth, iou_thresh=IOU_THRESHOLD):
    scores, tp, _, n_gt = _pool(detections, ground_truth, iou_thresh)
    return average_precision(tp, n_gt, scores)


def detection_pr_curve(detections, ground_truth, iou_thresh=IOU_THRESHOLD):
    scores, tp, _, n_gt = _pool(detections, ground_truth, iou_thresh)
    return pr_curve(tp, n_gt, scores)


def apk(detections, ground_truth, alpha=ALPHA, iou_thresh=IOU_THRESHOLD):
    """Average precision per keypoint; returns ``(mean, per_keypoint[8])``.

    A detection is a keypoint-TP for index ``k`` when it matches a ground
    truth box and its ``k``-th vertex lies within ``alpha * max(h, w)`` of
    the matched ground truth vertex.
    """
    scores, _, hits, n_gt = _pool(detections, ground_truth, iou_thresh, alpha)
    per = np.array([average_precision(hits[:, k], n_gt, scores) for k in range(8)])
    return float(per.mean()), per


def keypoint_correct(gt_boxes, gt_cuboids, pred_cuboids, alpha=ALPHA):
    """``(N, 8)`` boolean grid of correct keypoints (distance <= threshold)."""
    gt_boxes = np.asarray(gt_boxes, dtype=float).reshape(-1, 4)
    gt_cuboids = np.asarray(gt_cuboids, dtype=float).reshape(-1, 8, 2)
    pred_cuboids = np.asarray(pred_cuboids, dtype=float).reshape(-1, 8, 2)
    if not (len(gt_boxes) == len(gt_cuboids) == len(pred_cuboids)):
        raise CountMismatch(
            f"{len(pred_cuboids)} predictions for {len(gt_cuboids)} ground-truth cuboids"
        )
    dist = np.linalg.norm(pred_cuboids - gt_cuboids, axis=2)
    return dist <= keypoint_thresholds(gt_boxes, alpha)[:, None]


def pck(gt_boxes, gt_cuboids, pred_cuboids, alpha=ALPHA):
    """Overall and per-keypoint PCK for predictions made on ground-truth boxes."""
    correct = keypoint_correct(gt_boxes, gt_cuboids, pred_cuboids, alpha)
    if correct.size == 0:
        return 0.0, np.zeros(8)
    return float(correct.mean()), correct.mean(axis=0)


def face_pck(gt_boxes, gt_cuboids, pred_cuboids, alpha=ALPHA):
    """Fraction of instances whose four face vertices are all correct, per face."""
    correct = keypoint_correct(gt_boxes, gt_cuboids, pred_cuboids, alpha)
    if len(correct) == 0:
        return {name: 0.0 for name in FACES}
    return {name: float(correct[:, list(idx)].all(axis=1).mean()) for name, idx in FACES.items()}


def pck_sweep(gt_boxes, gt_cuboids, pred_cuboids, alphas):
    """PCK at each alpha; nondecreasing because the threshold grows with alpha."""
    gt_boxes = np.asarray(gt_boxes, dtype=float).reshape(-1, 4)
    dist = np.linalg.norm(
        np.asarray(pred_cuboids, dtype=float).reshape(-1, 8, 2)
        - np.asarray(gt_cuboids, dtype=float).reshape(-1, 8, 2),
        axis=2,
    )
    if dist.size == 0:
        return np.zeros(len(alphas))
    unit = keypoint_thresholds(gt_boxes, 1.0)[:, None]
    return np.array([float((dist <= a * unit).mean()) for a in alphas])


def write_pr_csv(path, curve):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["recall", "precision"])
        for r, p in zip(curve.recall, curve.precision):
            w.writerow([f"{r:.6g}", f"{p:.6g}"])


def write_pck_csv(path, alphas, values):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "pck"])
        for a, v in zip(alphas, values):
            w.writerow([f"{a:.6g}", f"{v:.6g}"])
