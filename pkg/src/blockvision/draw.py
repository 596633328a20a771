"""Tiny software rasterizer for synthetic scenes and debug overlays.

Hard-edged (no anti-aliasing) on purpose: renders must be bit-stable
and edge positions predictable for the detector tests.
"""

from __future__ import annotations

import numpy as np


def fill_convex_polygon(img: np.ndarray, pts, color) -> None:
    """Fill a convex polygon in-place. ``pts`` is a sequence of (x, y)."""
    pts = np.asarray(pts, dtype=np.float64)
    h, w = img.shape[:2]
    x_lo = max(0, int(np.floor(pts[:, 0].min())))
    x_hi = min(w - 1, int(np.ceil(pts[:, 0].max())))
    y_lo = max(0, int(np.floor(pts[:, 1].min())))
    y_hi = min(h - 1, int(np.ceil(pts[:, 1].max())))
    if x_lo > x_hi or y_lo > y_hi:
        return

    # Signed area fixes the winding so the half-plane tests agree.
    n = len(pts)
    area = 0.0
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        area += x1 * y2 - x2 * y1
    orient = 1.0 if area >= 0 else -1.0

    ys, xs = np.mgrid[y_lo : y_hi + 1, x_lo : x_hi + 1]
    mask = np.ones(xs.shape, dtype=bool)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        cross = (x2 - x1) * (ys - y1) - (y2 - y1) * (xs - x1)
        mask &= orient * cross >= 0
    img[y_lo : y_hi + 1, x_lo : x_hi + 1][mask] = color


def draw_line(img: np.ndarray, p1, p2, color, thickness: float = 1.0) -> None:
    """Draw a segment as the set of pixels within thickness/2 of it."""
    x1, y1 = float(p1[0]), float(p1[1])
    x2, y2 = float(p2[0]), float(p2[1])
    h, w = img.shape[:2]
    r = thickness / 2.0
    x_lo = max(0, int(np.floor(min(x1, x2) - r)))
    x_hi = min(w - 1, int(np.ceil(max(x1, x2) + r)))
    y_lo = max(0, int(np.floor(min(y1, y2) - r)))
    y_hi = min(h - 1, int(np.ceil(max(y1, y2) + r)))
    if x_lo > x_hi or y_lo > y_hi:
        return

    ys, xs = np.mgrid[y_lo : y_hi + 1, x_lo : x_hi + 1]
    dx, dy = x2 - x1, y2 - y1
    norm = dx * dx + dy * dy
    if norm == 0:
        t = np.zeros(xs.shape)
    else:
        t = np.clip(((xs - x1) * dx + (ys - y1) * dy) / norm, 0.0, 1.0)
    dist2 = (xs - (x1 + t * dx)) ** 2 + (ys - (y1 + t * dy)) ** 2
    mask = dist2 <= r * r
    img[y_lo : y_hi + 1, x_lo : x_hi + 1][mask] = color


def draw_polygon_outline(img: np.ndarray, pts, color, thickness: float = 1.0) -> None:
    pts = [tuple(map(float, p)) for p in pts]
    for i in range(len(pts)):
        draw_line(img, pts[i], pts[(i + 1) % len(pts)], color, thickness)


def draw_cross(img: np.ndarray, center, color, size: int = 4) -> None:
    x, y = float(center[0]), float(center[1])
    draw_line(img, (x - size, y), (x + size, y), color, 1.0)
    draw_line(img, (x, y - size), (x, y + size), color, 1.0)
