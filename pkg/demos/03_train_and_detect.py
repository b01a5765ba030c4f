"""Train a small detector, run it, and score it.

Run:  python demos/03_train_and_detect.py [iterations]

The default 3000 iterations on 500 scenes take about a minute on one core.
Pass a smaller number for a quick look. The script reports AP (boxes),
APK (keypoints on detections) and PCK (keypoints given ground-truth boxes)
for one and two passes of iterative feature pooling.
"""

import sys
import time

import numpy as np

from cuboidnet import metrics
from cuboidnet.data import SceneConfig, generate
from cuboidnet.geometry import VERTEX_NAMES
from cuboidnet.netcore import TrainConfig, detect, predict_on_boxes, train

iterations = int(sys.argv[1]) if len(sys.argv) > 1 else 3000
scenes = SceneConfig(seed=0)
train_set = generate(scenes, 500)
test_set = generate(scenes, 100, start=100_000)

cfg = TrainConfig(iterations=iterations, seed=0, log_every=0)


def progress(it, loss):
    if (it + 1) % max(iterations // 10, 1) == 0:
        print(f"  iter {it + 1:5d}  total loss {loss.total:.3f}")


t = time.perf_counter()
model, log = train(train_set, cfg, callback=progress)
print(f"trained in {time.perf_counter() - t:.0f} s")

for iters in (1, 2):
    dets, gts, pcs = [], [], []
    for img, ann in test_set:
        dets.append(detect(img, model, score_thresh=0.05, refine_iters=iters))
        gts.append(ann.pairs())
        pcs.append(predict_on_boxes(img, model, ann.boxes, iters))
    gb = np.concatenate([a.boxes for _, a in test_set])
    gc = np.concatenate([a.vertices for _, a in test_set])
    pck, per = metrics.pck(gb, gc, np.concatenate(pcs))
    apk, _ = metrics.apk(dets, gts)
    print(f"\n{iters} pass(es): AP {metrics.detection_ap(dets, gts):.3f}  APK {apk:.3f}  PCK {pck:.3f}")
    print("  per-corner PCK  " + "  ".join(f"{n} {p:.2f}" for n, p in zip(VERTEX_NAMES, per)))

img, ann = test_set[0]
print("\nfirst test scene:")
for d in detect(img, model):
    print(f"  score {d.score:.2f}  box {np.round(d.box, 1)}")
print("  ground truth     " + "  ".join(str(np.round(b, 1)) for b in ann.boxes))
