"""Command-line front end: ``cuboidnet {config,gen,train,detect,eval}``.

Config files are JSON objects whose keys are a subset of the fields of
:class:`cuboidnet.data.SceneConfig` (``gen``) or
:class:`cuboidnet.netcore.TrainConfig` (``train``); ``cuboidnet config
scene|train`` prints the full defaults. Flags override the file, and the
``CUBOID_SEED`` environment variable overrides the seed of either.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import data, metrics
from .errors import CuboidError
from .geometry import VERTEX_NAMES
from .netcore import checkpoint
from .netcore.detector import Detection, detect, predict_on_boxes
from .netcore.trainer import TrainConfig, train

SEED_ENV = "CUBOID_SEED"
DETECTIONS_FILE = "detections.jsonl"


def _read_config(path):
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise CuboidError(f"{path}: config must be a JSON object")
    return obj


def _seed_override(cfg_dict):
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            cfg_dict["seed"] = int(env)
        except ValueError as exc:
            raise CuboidError(f"{SEED_ENV}={env!r} is not an integer") from exc
    return cfg_dict


def _build(factory, d, what):
    try:
        return factory(d)
    except (TypeError, ValueError) as exc:
        raise CuboidError(f"bad {what} config: {exc}") from exc


def scene_config(path=None):
    return _build(data.SceneConfig.from_dict, _seed_override(_read_config(path)), "scene")


def train_config(path=None, no_corner_loss=False, no_bbox_loss=False, iterations=None):
    cfg = _build(TrainConfig.from_dict, _seed_override(_read_config(path)), "training")
    if iterations is not None:
        cfg.iterations = iterations
    if no_corner_loss:
        cfg.loss_weights = replace(cfg.loss_weights, roi_corner=0.0)
    if no_bbox_loss:
        cfg.loss_weights = replace(cfg.loss_weights, roi_reg=0.0)
    return cfg


# --- commands ---------------------------------------------------------------


def cmd_config(args):
    d = data.config_dict(data.SceneConfig()) if args.kind == "scene" else TrainConfig().as_dict()
    print(json.dumps(d, indent=2))
    return 0


def cmd_gen(args):
    cfg = scene_config(args.config)
    if args.count < 0:
        raise CuboidError("count must be >= 0")
    data.save_dataset(args.out, data.generate(cfg, args.count))
    print(f"wrote {args.count} images to {args.out}")
    return 0


def cmd_train(args):
    if not os.path.isdir(args.dataset):
        raise CuboidError(f"dataset directory {args.dataset} does not exist")
    cfg = train_config(args.config, args.no_corner_loss, args.no_bbox_loss, args.iterations)
    dataset = data.load_dataset(args.dataset)

    def report(it, breakdown):
        if cfg.log_every and (it + 1) % cfg.log_every == 0:
            terms = " ".join(f"{k}={v:.4f}" for k, v in breakdown.as_dict().items())
            print(f"iter {it + 1}: {terms}", flush=True)

    model, _ = train(dataset, cfg, callback=report)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    checkpoint.save(args.out, model, cfg.as_dict(), cfg.seed)
    print(f"saved checkpoint to {args.out}")
    return 0


def _image_list(paths):
    """Expand dataset directories into ``(name, path, annotation or None)``."""
    out = []
    for p in paths:
        if os.path.isdir(p):
            for name, ann in data.load_annotations(p):
                out.append((name, os.path.join(p, name), ann))
        else:
            out.append((os.path.basename(p), p, None))
    return out


def detection_record(name, dets, on_gt=None):
    rec = {
        "image": name,
        "detections": [
            {"score": float(d.score),
             "box": [float(v) for v in d.box],
             "cuboid": [[float(x), float(y)] for x, y in d.cuboid]}
            for d in dets
        ],
    }
    if on_gt is not None:
        rec["on_gt"] = [[[float(x), float(y)] for x, y in c] for c in on_gt]
    return rec


def cmd_detect(args):
    model, _ = checkpoint.load(args.checkpoint)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with open(args.out, "w", encoding="utf-8") as fh:
        for name, path, ann in _image_list(args.images):
            image = data.load_image(path)
            dets = detect(image, model, score_thresh=args.score_thresh, refine_iters=args.iters)
            on_gt = None
            if ann is not None:
                on_gt = predict_on_boxes(image, model, ann.boxes, args.iters)
            fh.write(json.dumps(detection_record(name, dets, on_gt)) + "\n")
            n += 1
    print(f"wrote detections for {n} images to {args.out}")
    return 0


def read_detections(path):
    """``{image name: record}`` from a detections JSON-lines file."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                rec["detections"] = [
                    Detection(float(d["score"]), np.array(d["box"], float), np.array(d["cuboid"], float))
                    for d in rec["detections"]
                ]
                out[rec["image"]] = rec
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
                raise data.ParseError(str(err), line=lineno) from err
    return out


def _table(title, header, rows):
    print(title)
    print("  " + " ".join(f"{h:>8}" for h in header))
    for row in rows:
        print("  " + " ".join(f"{v:>8}" if isinstance(v, str) else f"{v:8.4f}" for v in row))


def evaluate(records, annotations, alpha=metrics.ALPHA):
    """All metrics for detection records against ``[(name, annotation)]``."""
    dets, gts, gb, gc, pc = [], [], [], [], []
    have_on_gt = True
    for name, ann in annotations:
        rec = records.get(name, {"detections": []})
        dets.append(rec["detections"])
        gts.append(ann.pairs())
        gb.append(ann.boxes)
        gc.append(ann.vertices)
        if "on_gt" in rec and len(rec["on_gt"]) == len(ann.cuboids):
            pc.append(np.array(rec["on_gt"], float).reshape(-1, 8, 2))
        else:
            have_on_gt = False
    result = {
        "ap": metrics.detection_ap(dets, gts),
        "pr": metrics.detection_pr_curve(dets, gts),
    }
    result["apk"], result["apk_per"] = metrics.apk(dets, gts, alpha)
    if have_on_gt and gb:
        gb, gc, pc = np.concatenate(gb), np.concatenate(gc), np.concatenate(pc)
        result["pck"], result["pck_per"] = metrics.pck(gb, gc, pc, alpha)
        result["face_pck"] = metrics.face_pck(gb, gc, pc, alpha)
        result["alphas"] = np.round(np.linspace(0.0, 0.5, 51), 6)
        result["pck_curve"] = metrics.pck_sweep(gb, gc, pc, result["alphas"])
    return result


def cmd_eval(args):
    records = read_detections(args.detections)
    annotations = data.load_annotations(args.dataset)
    res = evaluate(records, annotations, args.alpha)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    print(f"AP   {res['ap']:.4f}")
    print(f"APK  {res['apk']:.4f}")
    if "pck" in res:
        print(f"PCK  {res['pck']:.4f}")
        _table("per keypoint", ["vertex", "PCK", "APK"],
               [(VERTEX_NAMES[k], res["pck_per"][k], res["apk_per"][k]) for k in range(8)])
        _table("per face", ["face", "PCK"], [(f, v) for f, v in res["face_pck"].items()])
        metrics.write_pck_csv(out / "pck_alpha.csv", res["alphas"], res["pck_curve"])
    else:
        print("PCK  n/a (detections file has no predictions on ground-truth boxes)")
        _table("per keypoint", ["vertex", "APK"], [(VERTEX_NAMES[k], res["apk_per"][k]) for k in range(8)])
    metrics.write_pr_csv(out / "pr.csv", res["pr"])
    return 0


# --- entry point ------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="cuboidnet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("config", help="print default configuration as JSON")
    c.add_argument("kind", choices=["scene", "train"])
    c.set_defaults(func=cmd_config)

    g = sub.add_parser("gen", help="render a synthetic dataset")
    g.add_argument("out", help="output directory")
    g.add_argument("--count", type=int, default=100)
    g.add_argument("--config", help="scene config JSON")
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train a detector")
    t.add_argument("dataset", help="dataset directory")
    t.add_argument("out", help="output checkpoint file")
    t.add_argument("--config", help="training config JSON")
    t.add_argument("--iterations", type=int)
    t.add_argument("--no-corner-loss", action="store_true", help="set the corner loss weight to 0")
    t.add_argument("--no-bbox-loss", action="store_true", help="set the box regression loss weight to 0")
    t.set_defaults(func=cmd_train)

    d = sub.add_parser("detect", help="run a checkpoint on images or dataset directories")
    d.add_argument("checkpoint")
    d.add_argument("images", nargs="*", help="PNG files or dataset directories")
    d.add_argument("--out", default=DETECTIONS_FILE)
    d.add_argument("--iters", type=int, default=2, help="refinement passes (>= 1)")
    d.add_argument("--score-thresh", type=float, default=0.5)
    d.set_defaults(func=cmd_detect)

    e = sub.add_parser("eval", help="score detections against a dataset")
    e.add_argument("detections")
    e.add_argument("dataset")
    e.add_argument("--alpha", type=float, default=metrics.ALPHA)
    e.add_argument("--out", default="eval", help="directory for pr.csv and pck_alpha.csv")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CuboidError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
