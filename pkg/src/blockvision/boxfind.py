"""Stage 1: find the target half of the box and rectify it top-down.

The perimeter of the target area shows up as two long near-horizontal
and two long near-vertical lines hugging the image borders. We pick the
dominant segment in each border band, intersect their supporting lines
for the corners, and warp the enclosed quad to a fixed 400x400 frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import draw
from .errors import IncompletePerimeter
from .geometry import LineSegment, Quad, homography_from_quads, order_corners, segment_intersection, warp
from .raster import CannyParams, HoughParams, canny, ppht, to_grayscale

RECTIFIED_SIZE = 400

RECTIFIED_QUAD = Quad(
    (
        (0.0, 0.0),
        (float(RECTIFIED_SIZE - 1), 0.0),
        (float(RECTIFIED_SIZE - 1), float(RECTIFIED_SIZE - 1)),
        (0.0, float(RECTIFIED_SIZE - 1)),
    )
)

# Border selection knobs; see detect_target_area.
_BORDER_ANGLE_TOL = 15.0
_BORDER_BAND = 0.25
_BORDER_MIN_LEN = 0.30


@dataclass(frozen=True)
class BoxDetection:
    perimeter_segments: list[LineSegment]
    corners: Quad
    confidence: float


def _gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    return to_grayscale(img) if img.ndim == 3 else img


def detect_target_area(
    img: np.ndarray,
    canny_params: CannyParams = CannyParams(),
    hough_params: HoughParams = HoughParams(),
    seed: int = 0,
) -> BoxDetection:
    """Locate the four border lines of the target area.

    A segment is a border candidate when it runs within 15 degrees of
    horizontal or vertical, its midpoint falls in the matching outer 25%
    band of the image, and it spans at least 30% of the image dimension
    (short block edges near the border must not win). The outermost
    candidate per band is kept: the wall stroke produces an edge line on
    each of its sides, and only the outer one is the area boundary.
    Fewer than four found bands raise IncompletePerimeter carrying the
    partial segment set.
    """
    gray = _gray(img)
    h, w = gray.shape
    edges = canny(gray, canny_params)
    segments = ppht(edges, hough_params, seed=seed)

    bands: dict[str, LineSegment] = {}
    for seg in segments:
        ang = seg.angle_deg
        horizontal = min(ang, 180.0 - ang) <= _BORDER_ANGLE_TOL
        vertical = abs(ang - 90.0) <= _BORDER_ANGLE_TOL
        mx, my = seg.midpoint
        side = None
        if horizontal and seg.length >= _BORDER_MIN_LEN * w:
            if my <= _BORDER_BAND * h:
                side = "top"
            elif my >= (1.0 - _BORDER_BAND) * h:
                side = "bottom"
        elif vertical and seg.length >= _BORDER_MIN_LEN * h:
            if mx <= _BORDER_BAND * w:
                side = "left"
            elif mx >= (1.0 - _BORDER_BAND) * w:
                side = "right"
        if side is None:
            continue

        def outwardness(s: LineSegment) -> float:
            sx, sy = s.midpoint
            return {"top": -sy, "bottom": sy, "left": -sx, "right": sx}[side]

        if side not in bands or outwardness(seg) > outwardness(bands[side]):
            bands[side] = seg

    found = [bands[k] for k in ("top", "right", "bottom", "left") if k in bands]
    if len(bands) < 4:
        raise IncompletePerimeter(found)

    corners = []
    for pair in (("top", "left"), ("top", "right"), ("bottom", "right"), ("bottom", "left")):
        cross = segment_intersection(bands[pair[0]], bands[pair[1]], extension=1e9)
        if cross is None:
            raise IncompletePerimeter(found)
        corners.append(cross.point)

    for x, y in corners:
        if not (-10.0 <= x <= w + 10.0 and -10.0 <= y <= h + 10.0):
            # A "corner" far outside the frame means band selection
            # latched onto something that is not the perimeter.
            raise IncompletePerimeter(found)

    return BoxDetection(
        perimeter_segments=found,
        corners=order_corners(corners),
        confidence=len(bands) / 4.0,
    )


def rectification_homography(box: BoxDetection):
    return homography_from_quads(box.corners, RECTIFIED_QUAD)


def rectify(img: np.ndarray, box: BoxDetection) -> np.ndarray:
    """Warp the detected quad to the fixed 400x400 top-down frame."""
    return warp(np.asarray(img), rectification_homography(box), RECTIFIED_SIZE, RECTIFIED_SIZE)


def draw_box_overlay(img: np.ndarray, box: BoxDetection) -> np.ndarray:
    """Debug overlay: perimeter segments in yellow, corners as red crosses."""
    out = np.asarray(img).copy()
    if out.ndim == 2:
        out = np.stack([out] * 3, axis=-1)
    for seg in box.perimeter_segments:
        draw.draw_line(out, seg.p1, seg.p2, (255, 220, 0), 2.0)
    for corner in box.corners.corners:
        draw.draw_cross(out, corner, (255, 0, 0), 5)
    return out
