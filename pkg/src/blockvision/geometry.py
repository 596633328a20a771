"""Planar geometry shared by both detection stages.

Segments and their intersections, right-angle tests, corner ordering,
and plane-to-plane homographies (direct linear solve plus inverse-mapped
bilinear warping).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateQuad, SingularSystem

Point = tuple[float, float]

_PARALLEL_SIN = 1e-9


@dataclass(frozen=True)
class LineSegment:
    """Directed segment between two pixel-space points (sub-pixel ok)."""

    p1: Point
    p2: Point

    def __post_init__(self):
        if tuple(self.p1) == tuple(self.p2):
            raise ValueError("segment endpoints coincide")

    @property
    def length(self) -> float:
        return math.dist(self.p1, self.p2)

    @property
    def angle_deg(self) -> float:
        """Direction angle in [0, 180), measured y-down like image coords."""
        dx = self.p2[0] - self.p1[0]
        dy = self.p2[1] - self.p1[1]
        return math.degrees(math.atan2(dy, dx)) % 180.0

    @property
    def midpoint(self) -> Point:
        return ((self.p1[0] + self.p2[0]) / 2.0, (self.p1[1] + self.p2[1]) / 2.0)


@dataclass(frozen=True)
class Intersection:
    """Meeting point of two segments' supporting lines.

    ``seg_a``/``seg_b`` are caller-side identifiers (list indices), so an
    intersection graph can be rebuilt without holding segment objects.
    ``angle_deg`` is the acute angle between the lines, in (0, 90].
    """

    point: Point
    seg_a: int
    seg_b: int
    angle_deg: float


@dataclass(frozen=True)
class Quad:
    """Four corners ordered top-left, top-right, bottom-right, bottom-left."""

    corners: tuple[Point, Point, Point, Point]

    def __post_init__(self):
        if len(self.corners) != 4:
            raise DegenerateQuad("quad needs exactly 4 corners")
        if self.area <= 0.0:
            raise DegenerateQuad("quad has no area")

    @property
    def area(self) -> float:
        s = 0.0
        for i in range(4):
            x1, y1 = self.corners[i]
            x2, y2 = self.corners[(i + 1) % 4]
            s += x1 * y2 - x2 * y1
        return abs(s) / 2.0

    def as_array(self) -> np.ndarray:
        return np.asarray(self.corners, dtype=np.float64)


@dataclass(frozen=True)
class Homography:
    """3x3 projective map, normalized so matrix[2, 2] == 1 when nonzero."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError("homography must be 3x3")
        if abs(np.linalg.det(m)) <= 1e-12:
            raise SingularSystem("homography is not invertible")
        if m[2, 2] != 0.0:
            m = m / m[2, 2]
        object.__setattr__(self, "matrix", m)

    def apply(self, points) -> np.ndarray:
        """Map an (n, 2) array of points through the homography."""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        hom = np.hstack([pts, np.ones((len(pts), 1))])
        out = hom @ self.matrix.T
        return out[:, :2] / out[:, 2:3]

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.matrix))


def segment_intersection(
    a: LineSegment, b: LineSegment, extension: float = 0.0, ids: tuple[int, int] = (0, 1)
) -> Intersection | None:
    """Intersect the supporting lines of two segments.

    Returns the crossing only if it falls within ``extension`` pixels of
    both segments' spans (measured along each segment), or ``None`` for
    parallel lines or a crossing too far outside either span.
    """
    ax, ay = a.p1
    dax, day = a.p2[0] - ax, a.p2[1] - ay
    bx, by = b.p1
    dbx, dby = b.p2[0] - bx, b.p2[1] - by

    denom = dax * dby - day * dbx
    len_a = a.length
    len_b = b.length
    if abs(denom) < _PARALLEL_SIN * len_a * len_b:
        return None

    # Parametric solve: a.p1 + t*da == b.p1 + s*db.
    rx, ry = bx - ax, by - ay
    t = (rx * dby - ry * dbx) / denom
    s = (rx * day - ry * dax) / denom

    ext_t = extension / len_a
    ext_s = extension / len_b
    if not (-ext_t <= t <= 1.0 + ext_t and -ext_s <= s <= 1.0 + ext_s):
        return None

    diff = abs(a.angle_deg - b.angle_deg) % 180.0
    if diff > 90.0:
        diff = 180.0 - diff
    return Intersection(
        point=(ax + t * dax, ay + t * day),
        seg_a=ids[0],
        seg_b=ids[1],
        angle_deg=diff,
    )


def is_right_angle(angle_deg: float, tol_deg: float = 10.0) -> bool:
    return abs(angle_deg - 90.0) <= tol_deg


def order_corners(points) -> Quad:
    """Order four loose points as TL, TR, BR, BL.

    Points are sorted by angle around their centroid (clockwise on a
    y-down raster), then rotated so the top-left corner (smallest x+y,
    ties broken by y then x) comes first.
    """
    pts = [(float(x), float(y)) for x, y in points]
    if len(pts) != 4:
        raise DegenerateQuad("need exactly 4 points")
    if len(set(pts)) != 4:
        raise DegenerateQuad("duplicate corner points")

    cx = sum(p[0] for p in pts) / 4.0
    cy = sum(p[1] for p in pts) / 4.0
    pts.sort(key=lambda p: math.atan2(p[1] - cy, p[0] - cx))

    # Collinear consecutive corners make the "quad" a sliver or a line.
    for i in range(4):
        x0, y0 = pts[i - 1]
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % 4]
        cross = (x1 - x0) * (y2 - y1) - (y1 - y0) * (x2 - x1)
        if abs(cross) < 1e-9:
            raise DegenerateQuad("three collinear corners")

    start = min(range(4), key=lambda i: (pts[i][0] + pts[i][1], pts[i][1], pts[i][0]))
    ordered = tuple(pts[(start + i) % 4] for i in range(4))
    quad = Quad(ordered)
    if quad.area < 1.0:
        raise DegenerateQuad("quad area below 1 px^2")
    return quad


def homography_from_quads(src: Quad, dst: Quad) -> Homography:
    """Solve the exact 8-unknown projective map sending src corners to dst.

    The system fixes h33 = 1; rank deficiency (collinear corners, or a
    map that would need h33 = 0) raises SingularSystem.
    """
    a = np.zeros((8, 8), dtype=np.float64)
    rhs = np.zeros(8, dtype=np.float64)
    for i, ((x, y), (u, v)) in enumerate(zip(src.corners, dst.corners)):
        a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -x * u, -y * u]
        a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -x * v, -y * v]
        rhs[2 * i] = u
        rhs[2 * i + 1] = v
    try:
        h = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("corner correspondence system is rank-deficient") from exc
    matrix = np.array(
        [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], 1.0]], dtype=np.float64
    )
    if abs(np.linalg.det(matrix)) <= 1e-12:
        raise SingularSystem("solved homography is not invertible")
    return Homography(matrix)


def warp(img: np.ndarray, h: Homography, out_w: int, out_h: int) -> np.ndarray:
    """Resample ``img`` under ``h`` into an (out_h, out_w) frame.

    Inverse mapping with bilinear interpolation; anything sampled from
    outside the source stays black. Identity homographies reproduce the
    input bit for bit.
    """
    img = np.asarray(img)
    gray_input = img.ndim == 2
    src = img[:, :, None] if gray_input else img
    src_h, src_w = src.shape[:2]

    inv = np.linalg.inv(h.matrix)
    ys, xs = np.mgrid[0:out_h, 0:out_w]
    ones = np.ones_like(xs, dtype=np.float64)
    denom = inv[2, 0] * xs + inv[2, 1] * ys + inv[2, 2] * ones
    safe = np.abs(denom) > 1e-12
    denom = np.where(safe, denom, 1.0)
    sx = (inv[0, 0] * xs + inv[0, 1] * ys + inv[0, 2]) / denom
    sy = (inv[1, 0] * xs + inv[1, 1] * ys + inv[1, 2]) / denom

    inside = safe & (sx >= 0) & (sx <= src_w - 1) & (sy >= 0) & (sy <= src_h - 1)
    sx = np.where(inside, sx, 0.0)
    sy = np.where(inside, sy, 0.0)

    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    x1 = np.minimum(x0 + 1, src_w - 1)
    y1 = np.minimum(y0 + 1, src_h - 1)
    fx = (sx - x0)[..., None]
    fy = (sy - y0)[..., None]

    vals = (
        src[y0, x0] * (1 - fx) * (1 - fy)
        + src[y0, x1] * fx * (1 - fy)
        + src[y1, x0] * (1 - fx) * fy
        + src[y1, x1] * fx * fy
    )
    out = np.rint(vals).astype(np.uint8)
    out[~inside] = 0
    return out[:, :, 0] if gray_input else out
