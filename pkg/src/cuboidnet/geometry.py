"""Projective cuboid geometry.

A cuboid in the image is an ``(8, 2)`` float array of vertices in the
canonical order::

    FTL, BTL, FBL, FTR, BBL, FBR, BTR, BBR

(front/back, top/bottom, left/right). In the object frame the front face
is at +x, the left face at -y and the top face at +z.

Boxes are ``(4,)`` arrays ``[x1, y1, x2, y2]`` in pixels. Homogeneous
points and lines are ``(3,)`` arrays.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import (
    DegenerateBox,
    DegenerateEdge,
    IdenticalInputs,
    NonPositiveDepth,
    SingularSystem,
)

VERTEX_NAMES = ("FTL", "BTL", "FBL", "FTR", "BBL", "FBR", "BTR", "BBR")
FTL, BTL, FBL, FTR, BBL, FBR, BTR, BBR = range(8)

# (front/back, left/right, top/bottom) signs along the local (x, y, z) axes
_CORNER_SIGNS = np.array(
    [
        [+1, -1, +1],  # FTL
        [-1, -1, +1],  # BTL
        [+1, -1, -1],  # FBL
        [+1, +1, +1],  # FTR
        [-1, -1, -1],  # BBL
        [+1, +1, -1],  # FBR
        [-1, +1, +1],  # BTR
        [-1, +1, -1],  # BBR
    ],
    dtype=float,
)

EDGES = {
    "depth": ((FTL, BTL), (FBL, BBL), (FTR, BTR), (FBR, BBR)),
    "horizontal": ((FTL, FTR), (BTL, BTR), (FBL, FBR), (BBL, BBR)),
    "vertical": ((FTL, FBL), (BTL, BBL), (FTR, FBR), (BTR, BBR)),
}
EDGE_CLASSES = ("depth", "horizontal", "vertical")

FACES = {
    "front": (FTL, FBL, FTR, FBR),
    "back": (BTL, BBL, BTR, BBR),
    "left": (FTL, BTL, FBL, BBL),
    "right": (FTR, FBR, BTR, BBR),
    "top": (FTL, BTL, FTR, BTR),
    "bottom": (FBL, BBL, FBR, BBR),
}

# Flipping the image horizontally exchanges the left and right faces.
HFLIP_PERMUTATION = (FTR, BTR, FBR, FTL, BBR, FBL, BTL, BBL)


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole camera with square pixels and no skew."""

    f: float
    cx: float
    cy: float

    def __post_init__(self):
        if not self.f > 0:
            raise ValueError(f"focal length must be positive, got {self.f}")

    @property
    def matrix(self):
        return np.array([[self.f, 0.0, self.cx], [0.0, self.f, self.cy], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class Cuboid3D:
    """Minimal 3D parametrization: center (m), dims (L, W, H) (m), rot (yaw, pitch, roll) (rad)."""

    center: Tuple[float, float, float]
    dims: Tuple[float, float, float]
    rot: Tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "dims", tuple(float(v) for v in self.dims))
        object.__setattr__(self, "rot", tuple(float(v) for v in self.rot))
        if len(self.center) != 3 or len(self.dims) != 3 or len(self.rot) != 3:
            raise ValueError("center, dims and rot must each have 3 components")
        if min(self.dims) <= 0:
            raise ValueError(f"cuboid dimensions must be positive, got {self.dims}")


def rotation_matrix(yaw, pitch, roll):
    """Intrinsic Z-Y-X Euler rotation ``Rz(yaw) @ Ry(pitch) @ Rx(roll)``."""
    cz, sz = np.cos(yaw), np.sin(yaw)
    cy, sy = np.cos(pitch), np.sin(pitch)
    cx, sx = np.cos(roll), np.sin(roll)
    rz = np.array([[cz, -sz, 0.0], [sz, cz, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cx, -sx], [0.0, sx, cx]])
    return rz @ ry @ rx


def euler_from_matrix(R):
    """Inverse of :func:`rotation_matrix` (away from pitch = +-pi/2)."""
    R = np.asarray(R, dtype=float)
    pitch = np.arcsin(np.clip(-R[2, 0], -1.0, 1.0))
    yaw = np.arctan2(R[1, 0], R[0, 0])
    roll = np.arctan2(R[2, 1], R[2, 2])
    return float(yaw), float(pitch), float(roll)


def cuboid_corners_3d(c):
    """The 8 corners of ``c`` in the camera frame, canonical order, shape ``(8, 3)``."""
    half = 0.5 * np.asarray(c.dims)
    local = _CORNER_SIGNS * half
    R = rotation_matrix(*c.rot)
    return local @ R.T + np.asarray(c.center)


def project(points, k):
    """Pinhole projection of one ``(3,)`` point or an ``(N, 3)`` array."""
    p = np.asarray(points, dtype=float)
    z = p[..., 2]
    if np.any(~(z > 0)):
        raise NonPositiveDepth(f"point(s) at non-positive depth: min Z = {np.min(z)}")
    x = k.f * p[..., 0] / z + k.cx
    y = k.f * p[..., 1] / z + k.cy
    return np.stack([x, y], axis=-1)


def project_cuboid(c, k):
    return project(cuboid_corners_3d(c), k)


def as_cuboid2d(vertices):
    v = np.asarray(vertices, dtype=float)
    if v.shape != (8, 2):
        raise ValueError(f"a 2D cuboid needs shape (8, 2), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("cuboid vertices must be finite")
    return v


def enclosing_box(cuboid):
    v = np.asarray(cuboid, dtype=float)
    x1, y1 = v.min(axis=0)
    x2, y2 = v.max(axis=0)
    if not (x2 > x1 and y2 > y1):
        raise DegenerateBox(f"zero-area enclosing box ({x1}, {y1}, {x2}, {y2})")
    return np.array([x1, y1, x2, y2])


# --- homogeneous primitives -------------------------------------------------


def homogeneous(p):
    return np.array([p[0], p[1], 1.0], dtype=float)


def normalize_homogeneous(h):
    h = np.asarray(h, dtype=float)
    scale = h[np.argmax(np.abs(h))]
    if scale == 0:
        raise IdenticalInputs("homogeneous vector is identically zero")
    return h / scale


def dehomogenize(h):
    """Euclidean ``(x, y)`` of a finite homogeneous point."""
    if h[2] == 0:
        raise ValueError("point at infinity has no Euclidean coordinates")
    return np.array([h[0] / h[2], h[1] / h[2]])


def line_through(p, q):
    """Homogeneous line through two points (Euclidean or homogeneous)."""
    hp = homogeneous(p) if len(p) == 2 else np.asarray(p, dtype=float)
    hq = homogeneous(q) if len(q) == 2 else np.asarray(q, dtype=float)
    return normalize_homogeneous(np.cross(hp, hq))


def intersect(l1, l2):
    """Intersection of two homogeneous lines; parallel lines meet at w = 0."""
    return normalize_homogeneous(np.cross(l1, l2))


def point_line_distance(p, line):
    a, b, c = line
    return abs(a * p[0] + b * p[1] + c) / np.hypot(a, b)


# --- vanishing points and the 6-corner parametrization ---------------------

# Per class: the two edges that avoid FTL and BBR.
_KNOWN_EDGES = {
    "depth": ((FBL, BBL), (FTR, BTR)),
    "horizontal": ((BTL, BTR), (FBL, FBR)),
    "vertical": ((BTL, BBL), (FTR, FBR)),
}
# Per dropped corner: (known neighbour, edge class) for its three incident edges.
_INCIDENT = {
    FTL: ((BTL, "depth"), (FTR, "horizontal"), (FBL, "vertical")),
    BBR: ((FBR, "depth"), (BBL, "horizontal"), (BTR, "vertical")),
}


def _edge_line(vertices, i, j):
    p, q = vertices[i], vertices[j]
    if np.array_equal(p, q):
        raise DegenerateEdge(f"edge {VERTEX_NAMES[i]}-{VERTEX_NAMES[j]} has coincident endpoints")
    return line_through(p, q)


def vanishing_points(vertices):
    """Vanishing points ``(depth, horizontal, vertical)`` from the six corners other than FTL/BBR.

    ``vertices`` is an ``(8, 2)`` array; the FTL and BBR rows are ignored
    (they may hold NaN).
    """
    v = np.asarray(vertices, dtype=float)
    vps = []
    for name in EDGE_CLASSES:
        (a, b), (c, d) = _KNOWN_EDGES[name]
        vps.append(intersect(_edge_line(v, a, b), _edge_line(v, c, d)))
    return tuple(vps)


def _least_squares_point(lines):
    A = np.array([ln[:2] / np.hypot(ln[0], ln[1]) for ln in lines])
    c = np.array([ln[2] / np.hypot(ln[0], ln[1]) for ln in lines])
    N = A.T @ A
    # all three normals parallel -> det(N) == 0
    if abs(np.linalg.det(N)) < 1e-12:
        raise SingularSystem("incident lines are (nearly) parallel")
    return np.linalg.solve(N, -A.T @ c)


def infer_missing_corners(vertices):
    """Fill in FTL and BBR from the other six corners via vanishing points.

    Each dropped corner is the least-squares meeting point of the three lines
    joining its known neighbours to the corresponding vanishing points.
    """
    v = np.array(vertices, dtype=float)
    try:
        vps = dict(zip(EDGE_CLASSES, vanishing_points(v)))
    except IdenticalInputs as err:
        raise SingularSystem("known edges collapse onto a common line") from err
    for corner, incident in _INCIDENT.items():
        lines = []
        for neighbour, cls in incident:
            try:
                lines.append(line_through(homogeneous(v[neighbour]), vps[cls]))
            except IdenticalInputs as err:
                raise SingularSystem("a neighbour coincides with its vanishing point") from err
        v[corner] = _least_squares_point(lines)
    return v


def drop_corners(vertices):
    """Copy of ``vertices`` with FTL and BBR replaced by NaN."""
    v = np.array(vertices, dtype=float)
    v[[FTL, BBR]] = np.nan
    return v
