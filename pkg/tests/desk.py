"""Desk-scale training runs shared by the acceptance suite.

One run trains on ``n_train`` synthetic scenes drawn with the run's seed and
scores a held-out set of 100 scenes from the same generator (indices far
past the training range). Results are cached per session so several
criteria can share a run.
"""

import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict

import numpy as np

from cuboidnet import metrics
from cuboidnet.data import SceneConfig, generate
from cuboidnet.losses import LossWeights
from cuboidnet.netcore import TrainConfig, detect, predict_on_boxes, train

TRAIN_IMAGES = 500
TEST_IMAGES = 100
TEST_START = 100_000
# keep low-confidence detections so the whole precision-recall curve is scored
AP_SCORE_THRESH = 0.05


@dataclass
class Outcome:
    train_seconds: float
    ap: Dict[int, float] = field(default_factory=dict)  # refinement passes -> AP
    apk: Dict[int, float] = field(default_factory=dict)
    pck: Dict[int, float] = field(default_factory=dict)  # on ground-truth boxes
    model: object = None


@lru_cache(maxsize=None)
def held_out(seed):
    return generate(SceneConfig(seed=seed), TEST_IMAGES, start=TEST_START)


@lru_cache(maxsize=None)
def run(seed, n_train=TRAIN_IMAGES, corner_only=False, passes=(1, 2)):
    cfg = TrainConfig(seed=seed, log_every=0)
    if corner_only:
        cfg.loss_weights = LossWeights(roi_reg=0.0)
    train_set = generate(SceneConfig(seed=seed), n_train)
    t = time.perf_counter()
    model, _ = train(train_set, cfg)
    out = Outcome(time.perf_counter() - t, model=model)
    for iters in passes:
        dets, gts, gb, gc, pc = [], [], [], [], []
        for img, ann in held_out(seed):
            dets.append(detect(img, model, score_thresh=AP_SCORE_THRESH, refine_iters=iters))
            gts.append(ann.pairs())
            gb.append(ann.boxes)
            gc.append(ann.vertices)
            pc.append(predict_on_boxes(img, model, ann.boxes, iters))
        out.ap[iters] = metrics.detection_ap(dets, gts)
        out.apk[iters] = metrics.apk(dets, gts)[0]
        out.pck[iters] = metrics.pck(np.concatenate(gb), np.concatenate(gc), np.concatenate(pc))[0]
    return out
