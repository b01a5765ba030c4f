"""The three ablations: refinement passes, loss terms, and training-set size.

Run:  python demos/04_ablations.py [seed ...]

For each seed this trains three models on freshly generated scenes (500
images with every loss, 500 images without the box regression loss, and
125 images with every loss) and scores them on 100 held-out scenes.
Expect a few minutes per seed.
"""

import sys

import numpy as np

from cuboidnet import metrics
from cuboidnet.data import SceneConfig, generate
from cuboidnet.losses import LossWeights
from cuboidnet.netcore import TrainConfig, detect, predict_on_boxes, train

seeds = [int(s) for s in sys.argv[1:]] or [0, 1, 2]


def score(model, test_set, iters):
    dets, gts, pcs = [], [], []
    for img, ann in test_set:
        dets.append(detect(img, model, score_thresh=0.05, refine_iters=iters))
        gts.append(ann.pairs())
        pcs.append(predict_on_boxes(img, model, ann.boxes, iters))
    gb = np.concatenate([a.boxes for _, a in test_set])
    gc = np.concatenate([a.vertices for _, a in test_set])
    return metrics.detection_ap(dets, gts), metrics.pck(gb, gc, np.concatenate(pcs))[0]


rows = []
for seed in seeds:
    scenes = SceneConfig(seed=seed)
    data = generate(scenes, 500)
    test_set = generate(scenes, 100, start=100_000)
    full, _ = train(data, TrainConfig(seed=seed, log_every=0))
    corner, _ = train(data, TrainConfig(seed=seed, log_every=0, loss_weights=LossWeights(roi_reg=0.0)))
    small, _ = train(data[:125], TrainConfig(seed=seed, log_every=0))
    ap1, pck1 = score(full, test_set, 1)
    ap2, pck2 = score(full, test_set, 2)
    row = (ap1, pck1, ap2, pck2, score(corner, test_set, 2)[0], score(small, test_set, 2)[0])
    rows.append(row)
    print(f"seed {seed}: AP {ap1:.3f}->{ap2:.3f}  PCK {pck1:.3f}->{pck2:.3f} (1->2 passes)  "
          f"corner-only AP {row[4]:.3f}  125-image AP {row[5]:.3f}")

m = np.mean(rows, axis=0)
print(f"\nmean over {len(seeds)} seeds")
print(f"  refinement:  PCK {m[1]:.4f} -> {m[3]:.4f}   AP {m[0]:.4f} -> {m[2]:.4f}")
print(f"  loss terms:  box+corner AP {m[2]:.4f}   corner only AP {m[4]:.4f}")
print(f"  data size:   500 images AP {m[2]:.4f}   125 images AP {m[5]:.4f}")
