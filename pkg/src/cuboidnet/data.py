"""Synthetic cuboid scenes, horizontal flipping, and JSON-lines persistence.

Annotation file format, one JSON object per line::

    {"id": "000000", "image": "000000.png",
     "cuboids": [{"box": [x1, y1, x2, y2], "verts": [[x, y], ...8], "vis": [true, ...8]}]}

Images are 8-bit grayscale PNGs next to the annotation file.
"""

import json
import os
from dataclasses import asdict, dataclass, field
from typing import List, Tuple

import numpy as np
from PIL import Image
from skimage.draw import ellipse, line_aa, polygon

from .errors import MissingImageFile, ParseError, RetryExhausted
from .geometry import (
    FACES,
    HFLIP_PERMUTATION,
    CameraIntrinsics,
    Cuboid3D,
    cuboid_corners_3d,
    enclosing_box,
    euler_from_matrix,
    project,
    rotation_matrix,
)
from .metrics import iou

ANNOTATION_FILE = "annotations.jsonl"

# object frame -> camera frame for an unrotated "facing the camera" pose:
# front (+x) toward the camera (-Z), right (+y) to image right (+X), top (+z) up (-Y)
_FACING_CAMERA = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, -1.0], [-1.0, 0.0, 0.0]])

# polygon vertex order around each face
_FACE_LOOPS = {
    "front": (0, 3, 5, 2),
    "back": (1, 6, 7, 4),
    "left": (0, 1, 4, 2),
    "right": (3, 6, 7, 5),
    "top": (0, 1, 6, 3),
    "bottom": (2, 4, 7, 5),
}
_FACE_SIGN = {"front": (0, 1), "back": (0, -1), "left": (1, -1), "right": (1, 1),
              "top": (2, 1), "bottom": (2, -1)}
_FACE_SHADE = {"top": 0.9, "front": 0.62, "left": 0.38, "right": 0.38, "back": 0.5, "bottom": 0.5}
_EDGES = ((0, 1), (2, 4), (3, 6), (5, 7), (0, 3), (1, 6), (2, 5), (4, 7),
          (0, 2), (1, 4), (3, 5), (6, 7))


@dataclass
class SceneConfig:
    image_size: Tuple[int, int] = (64, 64)  # (height, width)
    focal: float = 60.0
    depth: Tuple[float, float] = (4.5, 6.5)
    dims: Tuple[float, float] = (1.0, 2.0)
    yaw: Tuple[float, float] = (20.0, 70.0)  # degrees, about the object's vertical axis
    elevation: Tuple[float, float] = (15.0, 35.0)  # degrees the top face tips toward the camera
    roll: Tuple[float, float] = (-8.0, 8.0)  # degrees, in the image plane
    cuboids_per_image: Tuple[int, int] = (1, 2)
    min_box: float = 12.0  # pixels, smallest side of an enclosing box
    max_overlap: float = 0.2  # IoU allowed between cuboids in one scene
    clutter_lines: int = 4
    distractors: Tuple[int, int] = (1, 3)  # non-cuboid shaded shapes (hard negatives)
    noise: float = 0.03
    seed: int = 0

    def __post_init__(self):
        self.image_size = tuple(int(v) for v in self.image_size)
        for name in ("depth", "dims", "yaw", "elevation", "roll", "cuboids_per_image", "distractors"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name} range is empty: {lo} > {hi}")
            setattr(self, name, (lo, hi))
        if self.depth[0] <= 0:
            raise ValueError("minimum depth must be positive")
        if self.focal <= 0:
            raise ValueError("focal length must be positive")

    @property
    def camera(self):
        h, w = self.image_size
        return CameraIntrinsics(self.focal, w / 2.0, h / 2.0)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class CuboidAnnotation:
    box: np.ndarray
    verts: np.ndarray
    vis: np.ndarray


@dataclass
class Annotation:
    id: str
    cuboids: List[CuboidAnnotation] = field(default_factory=list)

    @property
    def boxes(self):
        return np.array([c.box for c in self.cuboids]).reshape(-1, 4)

    @property
    def vertices(self):
        return np.array([c.verts for c in self.cuboids]).reshape(-1, 8, 2)

    def pairs(self):
        return [(c.box, c.verts) for c in self.cuboids]


# --- scene sampling ---------------------------------------------------------


def _rng_for(cfg, index):
    return np.random.default_rng([int(cfg.seed), int(index)])


def sample_cuboid(cfg, rng):
    """One Cuboid3D whose projection lies inside the image."""
    cam = cfg.camera
    h, w = cfg.image_size
    for _ in range(100):
        z = rng.uniform(*cfg.depth)
        u = rng.uniform(0.2 * w, 0.8 * w)
        v = rng.uniform(0.2 * h, 0.8 * h)
        center = ((u - cam.cx) * z / cam.f, (v - cam.cy) * z / cam.f, z)
        dims = tuple(rng.uniform(*cfg.dims, size=3))
        yaw, elev, roll = np.radians([rng.uniform(*cfg.yaw), rng.uniform(*cfg.elevation),
                                      rng.uniform(*cfg.roll)])
        R = (rotation_matrix(roll, 0.0, 0.0) @ rotation_matrix(0.0, 0.0, elev)
             @ _FACING_CAMERA @ rotation_matrix(yaw, 0.0, 0.0))
        cuboid = Cuboid3D(center, dims, euler_from_matrix(R))
        corners = cuboid_corners_3d(cuboid)
        if np.any(corners[:, 2] <= 0.1):
            continue
        verts = project(corners, cam)
        inside = ((verts[:, 0] >= 1) & (verts[:, 0] <= w - 1)
                  & (verts[:, 1] >= 1) & (verts[:, 1] <= h - 1))
        if not inside.all():
            continue
        box = enclosing_box(verts)
        if min(box[2] - box[0], box[3] - box[1]) < cfg.min_box:
            continue
        return cuboid
    raise RetryExhausted("100 pose samples fell outside the view frustum")


def visible_faces(cuboid):
    """Faces whose outward normal points toward the camera at the origin."""
    corners = cuboid_corners_3d(cuboid)
    R = rotation_matrix(*cuboid.rot)
    faces = []
    for name, (axis, sign) in _FACE_SIGN.items():
        normal = sign * R[:, axis]
        center = corners[list(FACES[name])].mean(axis=0)
        if normal @ center < 0:
            faces.append(name)
    return faces


def vertex_visibility(cuboid):
    """A corner is visible when it lies on at least one camera-facing face."""
    vis = np.zeros(8, dtype=bool)
    for name in visible_faces(cuboid):
        vis[list(FACES[name])] = True
    return vis


def _draw_line(img, p, q, value, alpha=1.0):
    h, w = img.shape
    rr, cc, aa = line_aa(int(round(p[1])), int(round(p[0])), int(round(q[1])), int(round(q[0])))
    ok = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
    rr, cc, aa = rr[ok], cc[ok], aa[ok] * alpha
    img[rr, cc] = img[rr, cc] * (1 - aa) + value * aa


def _draw_cuboid(img, cuboid, verts, shade_offset):
    for name in visible_faces(cuboid):
        loop = verts[list(_FACE_LOOPS[name])]
        rr, cc = polygon(loop[:, 1], loop[:, 0], img.shape)
        img[rr, cc] = np.clip(_FACE_SHADE[name] + shade_offset, 0, 1)
    vis = vertex_visibility(cuboid)
    for i, j in _EDGES:
        hidden = not (vis[i] and vis[j])
        _draw_line(img, verts[i], verts[j], 0.05, alpha=0.45 if hidden else 1.0)


def _draw_distractor(img, rng, avoid):
    """A shaded convex polygon (3-5 sides) or ellipse with a dark outline,
    placed mostly clear of the boxes in ``avoid``."""
    h, w = img.shape
    radius = rng.uniform(6.0, 14.0)
    for _ in range(10):
        center = rng.uniform([4, 4], [w - 4, h - 4])
        extent = np.r_[center - radius, center + radius]
        if not avoid or max(iou(extent, b) for b in avoid) < 0.1:
            break
    shade = rng.uniform(0.3, 0.9)
    if rng.random() < 0.3:
        ry, rx = radius * rng.uniform(0.5, 1.0, size=2)
        rr, cc = ellipse(center[1], center[0], ry, rx, shape=img.shape, rotation=rng.uniform(0, np.pi))
        img[rr, cc] = shade
        return
    sides = int(rng.integers(3, 6))
    angles = np.sort(rng.uniform(0, 2 * np.pi, sides))
    radii = radius * rng.uniform(0.6, 1.0, sides)
    loop = center + np.column_stack([radii * np.cos(angles), radii * np.sin(angles)])
    rr, cc = polygon(loop[:, 1], loop[:, 0], img.shape)
    img[rr, cc] = shade
    for k in range(sides):
        _draw_line(img, loop[k], loop[(k + 1) % sides], 0.05)


def render_scene(cfg, index):
    """Render scene ``index``; deterministic in ``(cfg.seed, index)``.

    Returns ``(image, annotation, cuboids3d)`` with ``image`` a float array
    in ``[0, 1]``.
    """
    rng = _rng_for(cfg, index)
    h, w = cfg.image_size
    cam = cfg.camera
    img = np.full((h, w), rng.uniform(0.15, 0.55))


    n = int(rng.integers(cfg.cuboids_per_image[0], cfg.cuboids_per_image[1] + 1))
    cuboids, boxes = [], []
    for _ in range(20 * n):
        if len(cuboids) == n:
            break
        c = sample_cuboid(cfg, rng)
        box = enclosing_box(project(cuboid_corners_3d(c), cam))
        if boxes and max(iou(box, b) for b in boxes) > cfg.max_overlap:
            continue
        cuboids.append(c)
        boxes.append(box)

    for _ in range(cfg.clutter_lines):
        p = rng.uniform(0, [w, h])
        q = p + rng.normal(0, 0.3 * w, size=2)
        _draw_line(img, p, q, rng.uniform(0, 1))
    for _ in range(int(rng.integers(cfg.distractors[0], cfg.distractors[1] + 1))):
        _draw_distractor(img, rng, boxes)

    # painter's order: far to near
    order = sorted(range(len(cuboids)), key=lambda i: -cuboids[i].center[2])
    ann = Annotation(id=f"{index:06d}")
    for i in order:
        c = cuboids[i]
        verts = project(cuboid_corners_3d(c), cam)
        _draw_cuboid(img, c, verts, rng.uniform(-0.08, 0.08))
        ann.cuboids.append(CuboidAnnotation(enclosing_box(verts), verts, vertex_visibility(c)))

    if cfg.noise > 0:
        img = img + rng.normal(0, cfg.noise, img.shape)
    img = np.clip(img, 0.0, 1.0)
    return img, ann, [cuboids[i] for i in order]


def generate(cfg, count, start=0):
    """``count`` consecutive scenes as a list of ``(image, annotation)``."""
    out = []
    for i in range(start, start + count):
        img, ann, _ = render_scene(cfg, i)
        out.append((img, ann))
    return out


def hflip(image, ann):
    """Mirror about the vertical axis; left and right vertex labels swap."""
    width = image.shape[1]
    flipped = Annotation(id=ann.id)
    perm = list(HFLIP_PERMUTATION)
    for c in ann.cuboids:
        verts = c.verts[perm].copy()
        verts[:, 0] = width - verts[:, 0]
        box = np.array([width - c.box[2], c.box[1], width - c.box[0], c.box[3]])
        flipped.cuboids.append(CuboidAnnotation(box, verts, c.vis[perm].copy()))
    return image[:, ::-1].copy(), flipped


# --- persistence ------------------------------------------------------------


def _to_uint8(image):
    return np.clip(np.round(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)


def annotation_to_json(ann, image_name):
    return {
        "id": ann.id,
        "image": image_name,
        "cuboids": [
            {"box": [float(v) for v in c.box],
             "verts": [[float(x), float(y)] for x, y in c.verts],
             "vis": [bool(v) for v in c.vis]}
            for c in ann.cuboids
        ],
    }


def annotation_from_json(obj):
    cuboids = []
    for c in obj["cuboids"]:
        box = np.array(c["box"], dtype=float)
        verts = np.array(c["verts"], dtype=float)
        vis = np.array(c.get("vis", [True] * 8), dtype=bool)
        if box.shape != (4,) or verts.shape != (8, 2) or vis.shape != (8,):
            raise ValueError("cuboid entry has the wrong shape")
        cuboids.append(CuboidAnnotation(box, verts, vis))
    return Annotation(id=str(obj["id"]), cuboids=cuboids)


def save_dataset(path, items):
    """Write ``(image, annotation)`` pairs under directory ``path``."""
    os.makedirs(path, exist_ok=True)
    with open(os.path.join(path, ANNOTATION_FILE), "w", encoding="utf-8") as fh:
        for image, ann in items:
            name = f"{ann.id}.png"
            Image.fromarray(_to_uint8(image), mode="L").save(os.path.join(path, name))
            fh.write(json.dumps(annotation_to_json(ann, name)) + "\n")


def load_annotations(path):
    """Parse the annotation file only; returns ``[(image_name, annotation)]``."""
    ann_path = os.path.join(path, ANNOTATION_FILE)
    if not os.path.exists(ann_path):
        raise FileNotFoundError(f"no {ANNOTATION_FILE} in {path}")
    out = []
    with open(ann_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out.append((obj["image"], annotation_from_json(obj)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as err:
                raise ParseError(str(err), line=lineno) from err
    return out


def load_image(path):
    if not os.path.exists(path):
        raise MissingImageFile(path)
    return np.asarray(Image.open(path).convert("L"), dtype=float) / 255.0


def load_dataset(path):
    return [(load_image(os.path.join(path, name)), ann) for name, ann in load_annotations(path)]


def split(items, train_fraction, seed):
    """Seeded shuffle, then the first ``round(train_fraction * n)`` items train."""
    if not 0.0 <= train_fraction <= 1.0:
        raise ValueError("train_fraction must be in [0, 1]")
    order = np.random.default_rng(seed).permutation(len(items))
    n_train = int(round(train_fraction * len(items)))
    return [items[i] for i in order[:n_train]], [items[i] for i in order[n_train:]]


def config_dict(cfg):
    return asdict(cfg)
