"""Joint single-stage training of the RPN and the R-CNN head."""

import logging
from dataclasses import asdict, dataclass, field
from typing import Tuple

import numpy as np

from ..data import hflip
from ..encoding import clip_deltas, decode_box, encode_box, encode_vertices
from ..errors import EmptyDataset
from ..losses import TERMS, LossWeights, smooth_l1, softmax_log_loss, total_loss
from ..metrics import iou_matrix
from .anchors import POSITIVE, NEGATIVE, assign_anchor_targets
from .features import toy_feature_extractor
from .head import head_backward, head_forward
from .model import ModelConfig, init_model
from .optim import OptimState, sgd_step
from .proposals import clip_boxes, propose
from .roi import roi_pool
from .rpn import rpn_backward, rpn_forward

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    iterations: int = 3000
    images_per_batch: int = 1
    lr: float = 0.01
    lr_drop_at: float = 0.6  # fraction of iterations
    lr_drop_factor: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 0.0005
    seed: int = 0
    loss_weights: LossWeights = field(default_factory=LossWeights)
    anchor_batch: int = 64
    anchor_pos_fraction: float = 0.5
    anchor_pos_iou: float = 0.7
    anchor_neg_iou: float = 0.3
    roi_batch: int = 32
    roi_pos_fraction: float = 0.25
    roi_pos_iou: float = 0.5
    pre_nms: int = 200
    post_nms: int = 24
    rpn_nms: float = 0.7
    jitter: Tuple[float, float] = (0.25, 0.3)  # center shift / log-size spread of GT jitter
    refine_passes: int = 2
    dropout: float = 0.0
    box_stds: Tuple[float, float, float, float] = (0.1, 0.1, 0.2, 0.2)
    vert_std: float = 0.1
    hflip: bool = False
    log_every: int = 100
    model: ModelConfig = field(default_factory=ModelConfig)

    def __post_init__(self):
        # JSON configs deliver lists
        self.jitter = tuple(float(v) for v in self.jitter)
        self.box_stds = tuple(float(v) for v in self.box_stds)
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")

    def as_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "loss_weights" in d and isinstance(d["loss_weights"], dict):
            d["loss_weights"] = LossWeights(**d["loss_weights"])
        if "model" in d and isinstance(d["model"], dict):
            d["model"] = ModelConfig(**d["model"])
        return cls(**d)


class _Sample:
    """Per-image tensors that do not change during training."""

    def __init__(self, image, ann, anchors, cfg):
        self.fm = toy_feature_extractor(image, cfg.model.stride)
        self.size = image.shape
        self.gt_boxes = ann.boxes
        self.gt_verts = ann.vertices
        self.labels, self.deltas, _ = assign_anchor_targets(
            anchors, self.gt_boxes, cfg.anchor_pos_iou, cfg.anchor_neg_iou)


def _sample_indices(rng, pos, neg, batch, pos_fraction):
    n_pos = min(len(pos), int(round(batch * pos_fraction)))
    pos = rng.permutation(pos)[:n_pos] if n_pos else pos[:0]
    neg = rng.permutation(neg)[: batch - n_pos]
    return pos, neg


def _jitter_boxes(rng, gt_boxes, n, spread, width, height):
    if len(gt_boxes) == 0 or n == 0:
        return np.zeros((0, 4))
    src = gt_boxes[rng.integers(0, len(gt_boxes), n)]
    shift, scale = spread
    d = np.column_stack([rng.uniform(-shift, shift, (n, 2)), rng.uniform(-scale, scale, (n, 2))])
    return clip_boxes(decode_box(d, src), width, height)


def _valid(boxes):
    return ((boxes[:, 2] - boxes[:, 0]) >= 1.0) & ((boxes[:, 3] - boxes[:, 1]) >= 1.0)


class _HeadPass:
    """One head evaluation on a fixed set of RoIs, with losses and gradients."""

    def __init__(self, sample, rois, cfg, head, rng):
        self.rois = rois
        self.ref = cfg.model.reference_boxes(rois, sample.size)
        if len(sample.gt_boxes):
            ious = iou_matrix(rois, sample.gt_boxes)
            gt = ious.argmax(axis=1)
            fg = ious[np.arange(len(rois)), gt] >= cfg.roi_pos_iou
        else:
            gt = np.zeros(len(rois), dtype=int)
            fg = np.zeros(len(rois), dtype=bool)
        pooled, _ = roi_pool(sample.fm.values, rois, sample.fm.stride)
        cls, box, vert, self.cache = head_forward(pooled, head, train=True, rng=rng, dropout=cfg.dropout)
        self.box_pred = box
        stds = np.asarray(cfg.box_stds)
        self.cls_loss, d_cls = softmax_log_loss(cls, fg.astype(int))
        d_box = np.zeros_like(box)
        d_vert = np.zeros_like(vert)
        self.reg_loss = self.corner_loss = 0.0
        if fg.any():
            box_t = encode_box(sample.gt_boxes[gt[fg]], self.ref[fg]) / stds
            self.reg_loss, d_box[fg] = smooth_l1(box[fg], box_t)
            vert_t = encode_vertices(sample.gt_verts[gt[fg]], self.ref[fg]) / cfg.vert_std
            self.corner_loss, d_vert[fg] = smooth_l1(vert[fg], vert_t)
        w = cfg.loss_weights
        self.grads = (w.roi_cls * d_cls, w.roi_reg * d_box, w.roi_corner * d_vert)

    def next_rois(self, cfg, size):
        h, w = size
        deltas = clip_deltas(self.box_pred * np.asarray(cfg.box_stds))
        return clip_boxes(decode_box(deltas, self.ref), w, h)


def _image_step(sample, model, cfg, anchors, rng):
    """Losses and gradients for one image."""
    w = cfg.loss_weights
    h_img, w_img = sample.size

    # --- RPN
    logits, deltas, rpn_cache = rpn_forward(sample.fm.values, model.rpn)
    flat_logits = logits.reshape(-1, 2)
    flat_deltas = deltas.reshape(-1, 4)
    pos, neg = _sample_indices(rng, np.flatnonzero(sample.labels == POSITIVE),
                               np.flatnonzero(sample.labels == NEGATIVE),
                               cfg.anchor_batch, cfg.anchor_pos_fraction)
    picked = np.concatenate([pos, neg])
    anchor_cls, d_sel = softmax_log_loss(flat_logits[picked], (sample.labels[picked] == POSITIVE).astype(int))
    d_logits = np.zeros_like(flat_logits)
    d_logits[picked] = w.anchor_cls * d_sel
    anchor_reg, d_pos = smooth_l1(flat_deltas[pos], sample.deltas[pos])
    d_deltas = np.zeros_like(flat_deltas)
    d_deltas[pos] = w.anchor_reg * d_pos
    rpn_grads = rpn_backward(rpn_cache, d_logits, d_deltas, model.rpn)
    del rpn_grads["input"]

    # --- RoIs: proposals mixed half and half with jittered ground truth
    proposals, _ = propose(logits, deltas, anchors, sample.size, cfg.pre_nms, cfg.post_nms, cfg.rpn_nms)
    jittered = _jitter_boxes(rng, sample.gt_boxes, max(len(proposals), cfg.post_nms), cfg.jitter, w_img, h_img)
    candidates = np.concatenate([proposals, sample.gt_boxes, jittered])
    candidates = candidates[_valid(candidates)]
    if len(sample.gt_boxes):
        best = iou_matrix(candidates, sample.gt_boxes).max(axis=1)
    else:
        best = np.zeros(len(candidates))
    fg, bg = _sample_indices(rng, np.flatnonzero(best >= cfg.roi_pos_iou),
                             np.flatnonzero(best < cfg.roi_pos_iou),
                             cfg.roi_batch, cfg.roi_pos_fraction)
    rois = candidates[np.concatenate([fg, bg])]

    # --- head, possibly several refinement passes with RoIs held constant
    head_grads = None
    terms = {"anchor_cls": anchor_cls, "anchor_reg": anchor_reg, "roi_cls": 0.0, "roi_reg": 0.0, "roi_corner": 0.0}
    for k in range(cfg.refine_passes):
        if len(rois) == 0:
            break
        hp = _HeadPass(sample, rois, cfg, model.head, rng)
        g = head_backward(hp.cache, *hp.grads, model.head)
        del g["input"]
        head_grads = g if head_grads is None else {n: head_grads[n] + g[n] for n in g}
        terms["roi_cls"] += hp.cls_loss
        terms["roi_reg"] += hp.reg_loss
        terms["roi_corner"] += hp.corner_loss
        if k + 1 < cfg.refine_passes:
            rois = hp.next_rois(cfg, sample.size)
            rois = rois[_valid(rois)]
    return terms, rpn_grads, head_grads


def fold_target_stds(head, box_stds, vert_std):
    """Copy of ``head`` whose box/vertex outputs are in raw (unnormalized) units."""
    out = {k: v.copy() for k, v in head.items()}
    out["box_w"] *= np.asarray(box_stds)
    out["box_b"] *= np.asarray(box_stds)
    out["vert_w"] *= vert_std
    out["vert_b"] *= vert_std
    return out


def prepare(dataset, cfg):
    if len(dataset) == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    size = dataset[0][0].shape
    anchors = cfg.model.anchors(size)
    samples = [_Sample(img, ann, anchors, cfg) for img, ann in dataset]
    if cfg.hflip:
        samples += [_Sample(*hflip(img, ann), anchors, cfg) for img, ann in dataset]
    return samples, anchors


def train(dataset, cfg=None, callback=None):
    """Train on ``[(image, annotation), ...]``.

    Returns ``(model, loss_log)``; ``loss_log`` holds one LossBreakdown per
    iteration. The returned head emits raw deltas and offsets.
    """
    cfg = cfg or TrainConfig()
    samples, anchors = prepare(dataset, cfg)
    rng = np.random.default_rng(cfg.seed)
    model = init_model(cfg.model, rng)
    rpn_state, head_state = OptimState(), OptimState()
    drop_at = int(round(cfg.lr_drop_at * cfg.iterations))
    order = rng.permutation(len(samples))
    cursor = 0
    loss_log = []
    for it in range(cfg.iterations):
        lr = cfg.lr * (cfg.lr_drop_factor if it >= drop_at else 1.0)
        acc_terms = dict.fromkeys(TERMS, 0.0)
        rpn_acc, head_acc = None, None
        for _ in range(cfg.images_per_batch):
            if cursor == len(order):
                order, cursor = rng.permutation(len(samples)), 0
            sample = samples[order[cursor]]
            cursor += 1
            terms, rg, hg = _image_step(sample, model, cfg, anchors, rng)
            for name in TERMS:
                acc_terms[name] += terms[name] / cfg.images_per_batch
            rpn_acc = rg if rpn_acc is None else {n: rpn_acc[n] + rg[n] for n in rg}
            if hg is not None:
                head_acc = hg if head_acc is None else {n: head_acc[n] + hg[n] for n in hg}
        scale = 1.0 / cfg.images_per_batch
        sgd_step(model.rpn, {n: g * scale for n, g in rpn_acc.items()}, rpn_state,
                 lr, cfg.momentum, cfg.weight_decay)
        if head_acc is not None:
            sgd_step(model.head, {n: g * scale for n, g in head_acc.items()}, head_state,
                     lr, cfg.momentum, cfg.weight_decay)
        breakdown = total_loss(acc_terms, cfg.loss_weights)
        loss_log.append(breakdown)
        if callback is not None:
            callback(it, breakdown)
        if cfg.log_every and (it + 1) % cfg.log_every == 0:
            log.info("iter %d lr %.4g loss %.4f", it + 1, lr, breakdown.total)
    model.head = fold_target_stds(model.head, cfg.box_stds, cfg.vert_std)
    return model, loss_log
