"""Stage 2: turn rectified-frame segments into colored blocks.

Hough segments are filtered by three criteria, applied in order as
successive passes:

1. the segment intersects at least one other segment at a right angle,
2. one of its endpoints lies close to such an intersection,
3. it passes close to a partner segment it intersects.

The passes repeat until stable, so every survivor keeps a right-angle
partner inside the surviving set. Squares are then assembled by walking
closed four-step paths over the intersections, and each square is
colored from the pixels at its centre.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .boxfind import detect_target_area, rectify
from .errors import (
    AmbiguousColor,
    DegenerateQuad,
    IncompletePerimeter,
    InvalidConfig,
    SingularSystem,
)
from .geometry import (
    Intersection,
    LineSegment,
    Quad,
    is_right_angle,
    order_corners,
    segment_intersection,
)
from .raster import CannyParams, HoughParams, canny, ppht, to_grayscale

logger = logging.getLogger(__name__)


class BlockColor(Enum):
    RED = "red"
    GREEN = "green"
    BLUE = "blue"


# Canonical order everywhere a color sequence is needed (draws, JSON).
COLOR_ORDER = (BlockColor.RED, BlockColor.GREEN, BlockColor.BLUE)


@dataclass(frozen=True)
class FilterCriteria:
    right_angle_tol: float = 10.0
    endpoint_dist: float = 10.0
    segment_dist: float = 10.0

    def __post_init__(self):
        for name in ("right_angle_tol", "endpoint_dist", "segment_dist"):
            if getattr(self, name) <= 0:
                raise InvalidConfig(f"{name} must be positive")


@dataclass(frozen=True)
class IntersectionGraph:
    """Surviving segments plus their right-angle intersections.

    Intersection seg ids index into ``segments``. Two intersections are
    adjacent when they share a segment; that is the only linking rule.
    """

    segments: tuple[LineSegment, ...]
    intersections: tuple[Intersection, ...]

    def intersections_of(self, seg_index: int) -> list[int]:
        return [
            i
            for i, inter in enumerate(self.intersections)
            if seg_index in (inter.seg_a, inter.seg_b)
        ]


@dataclass(frozen=True)
class DetectedBlock:
    top: Quad
    color: BlockColor
    side_length: float

    @property
    def centroid(self) -> tuple[float, float]:
        xs = [p[0] for p in self.top.corners]
        ys = [p[1] for p in self.top.corners]
        return (sum(xs) / 4.0, sum(ys) / 4.0)


def _point_segment_distance(p, seg: LineSegment) -> float:
    px, py = p
    x1, y1 = seg.p1
    x2, y2 = seg.p2
    dx, dy = x2 - x1, y2 - y1
    t = ((px - x1) * dx + (py - y1) * dy) / (dx * dx + dy * dy)
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (x1 + t * dx), py - (y1 + t * dy))


def segment_distance(a: LineSegment, b: LineSegment) -> float:
    """Minimum Euclidean distance between two segments (0 if they cross)."""

    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    o1 = orient(a.p1, a.p2, b.p1)
    o2 = orient(a.p1, a.p2, b.p2)
    o3 = orient(b.p1, b.p2, a.p1)
    o4 = orient(b.p1, b.p2, a.p2)
    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)):
        return 0.0
    return min(
        _point_segment_distance(a.p1, b),
        _point_segment_distance(a.p2, b),
        _point_segment_distance(b.p1, a),
        _point_segment_distance(b.p2, a),
    )


def _right_angle_intersections(
    segs: list[LineSegment], indices: list[int], c: FilterCriteria
) -> list[Intersection]:
    found = []
    for ii, i in enumerate(indices):
        for j in indices[ii + 1 :]:
            inter = segment_intersection(segs[i], segs[j], extension=c.endpoint_dist, ids=(i, j))
            if inter is not None and is_right_angle(inter.angle_deg, c.right_angle_tol):
                found.append(inter)
    return found


def filter_segments(
    segs: list[LineSegment], criteria: FilterCriteria = FilterCriteria()
) -> IntersectionGraph:
    """Apply the three filtering criteria until the survivor set is stable."""
    alive = list(range(len(segs)))
    final: list[Intersection] = []
    while True:
        # Criterion 1: a right-angle intersection exists at all.
        inters = _right_angle_intersections(segs, alive, criteria)

        # Criterion 2: an own endpoint lies near one of those
        # intersections. The credit is per segment, not per pair: a
        # segment anchored at one corner may still supply its body to a
        # crossing elsewhere.
        near_end = set()
        for inter in inters:
            for sid in (inter.seg_a, inter.seg_b):
                seg = segs[sid]
                d = min(math.dist(seg.p1, inter.point), math.dist(seg.p2, inter.point))
                if d <= criteria.endpoint_dist:
                    near_end.add(sid)

        # Criterion 3: the segment passes close to an intersecting
        # partner. Only intersections between anchored segments count.
        kept = [
            x
            for x in inters
            if x.seg_a in near_end
            and x.seg_b in near_end
            and segment_distance(segs[x.seg_a], segs[x.seg_b]) <= criteria.segment_dist
        ]
        survivors = sorted({i for x in kept for i in (x.seg_a, x.seg_b)})

        if survivors == alive:
            final = kept
            break
        alive = survivors

    remap = {old: new for new, old in enumerate(alive)}
    return IntersectionGraph(
        segments=tuple(segs[i] for i in alive),
        intersections=tuple(
            Intersection(x.point, remap[x.seg_a], remap[x.seg_b], x.angle_deg) for x in final
        ),
    )


def _convex_clip(subject: list, clip: list) -> list:
    """Sutherland-Hodgman intersection of two convex polygons."""
    def signed_area(poly):
        s = 0.0
        for i in range(len(poly)):
            x1, y1 = poly[i]
            x2, y2 = poly[(i + 1) % len(poly)]
            s += x1 * y2 - x2 * y1
        return s / 2.0

    if signed_area(clip) < 0:
        clip = clip[::-1]
    out = list(subject)
    for i in range(len(clip)):
        if len(out) < 3:
            return []
        cx1, cy1 = clip[i]
        cx2, cy2 = clip[(i + 1) % len(clip)]
        prev = out
        out = []
        for j in range(len(prev)):
            px, py = prev[j]
            qx, qy = prev[(j + 1) % len(prev)]
            dp = (cx2 - cx1) * (py - cy1) - (cy2 - cy1) * (px - cx1)
            dq = (cx2 - cx1) * (qy - cy1) - (cy2 - cy1) * (qx - cx1)
            if dp >= 0:
                out.append((px, py))
            if (dp >= 0) != (dq >= 0):
                t = dp / (dp - dq)
                out.append((px + t * (qx - px), py + t * (qy - py)))
    return out


def quad_overlap_fraction(a: Quad, b: Quad) -> float:
    """Intersection area over the smaller quad's area."""
    def area(poly):
        s = 0.0
        for i in range(len(poly)):
            x1, y1 = poly[i]
            x2, y2 = poly[(i + 1) % len(poly)]
            s += x1 * y2 - x2 * y1
        return abs(s) / 2.0

    inter = _convex_clip(list(a.corners), list(b.corners))
    if len(inter) < 3:
        return 0.0
    return area(inter) / min(a.area, b.area)


def assemble_squares(
    g: IntersectionGraph,
    side_min: float = 20.0,
    side_max: float = 60.0,
    tol: float = 0.25,
) -> list[Quad]:
    """Walk 4-cycles of intersections and keep the square-ish ones.

    A cycle alternates: arrive at an intersection along one of its two
    segments, leave along the other, and the next corner must lie on the
    leaving segment. Accepted cycles turn consistently clockwise or
    counter-clockwise, have side lengths within ``tol`` relative spread,
    and a mean side inside [side_min, side_max]. Near-duplicates (three
    shared corners, or overlapping by half their area) collapse to the
    candidate with the smallest spread.
    """
    inters = g.intersections
    nodes_on: dict[int, list[int]] = {}
    for idx, inter in enumerate(inters):
        nodes_on.setdefault(inter.seg_a, []).append(idx)
        nodes_on.setdefault(inter.seg_b, []).append(idx)

    def other(node: int, seg: int) -> int:
        inter = inters[node]
        return inter.seg_b if seg == inter.seg_a else inter.seg_a

    candidates: dict[frozenset, tuple[float, Quad, frozenset]] = {}
    for n0 in range(len(inters)):
        for s1 in (inters[n0].seg_a, inters[n0].seg_b):
            for n1 in nodes_on.get(s1, []):
                if n1 == n0:
                    continue
                s2 = other(n1, s1)
                for n2 in nodes_on.get(s2, []):
                    if n2 in (n0, n1):
                        continue
                    s3 = other(n2, s2)
                    for n3 in nodes_on.get(s3, []):
                        if n3 in (n0, n1, n2):
                            continue
                        s4 = other(n3, s3)
                        if other(n0, s4) != s1 or s4 not in (inters[n0].seg_a, inters[n0].seg_b):
                            continue
                        if len({s1, s2, s3, s4}) != 4:
                            continue
                        key = frozenset((n0, n1, n2, n3))
                        pts = [inters[n].point for n in (n0, n1, n2, n3)]

                        crosses = []
                        for k in range(4):
                            ax, ay = pts[k]
                            bx, by = pts[(k + 1) % 4]
                            cx, cy = pts[(k + 2) % 4]
                            crosses.append((bx - ax) * (cy - by) - (by - ay) * (cx - bx))
                        if not (all(c > 0 for c in crosses) or all(c < 0 for c in crosses)):
                            continue

                        sides = [math.dist(pts[k], pts[(k + 1) % 4]) for k in range(4)]
                        mean_side = sum(sides) / 4.0
                        if mean_side <= 0 or not side_min <= mean_side <= side_max:
                            continue
                        spread = (max(sides) - min(sides)) / mean_side
                        if spread > tol:
                            continue
                        try:
                            quad = order_corners(pts)
                        except DegenerateQuad:
                            continue
                        best = candidates.get(key)
                        if best is None or spread < best[0]:
                            candidates[key] = (spread, quad, key)

    ranked = sorted(
        candidates.values(), key=lambda c: (c[0], c[1].area, tuple(sorted(c[2])))
    )
    accepted: list[tuple[float, Quad, frozenset]] = []
    for cand in ranked:
        ok = True
        for kept in accepted:
            if len(cand[2] & kept[2]) >= 3 or quad_overlap_fraction(cand[1], kept[1]) >= 0.5:
                ok = False
                break
        if ok:
            accepted.append(cand)
    return [c[1] for c in accepted]


def classify_color(
    rectified: np.ndarray,
    q: Quad,
    ambiguous_threshold: float = 10.0,
    single_pixel: bool = False,
) -> BlockColor:
    """Color of the block from the pixels at the quad's centroid.

    Default is a per-channel median of the 3x3 neighbourhood; the
    original single-pixel rule is available via ``single_pixel``. A near
    tie between the top two channels raises AmbiguousColor.
    """
    img = np.asarray(rectified)
    h, w = img.shape[:2]
    cx = int(round(sum(p[0] for p in q.corners) / 4.0))
    cy = int(round(sum(p[1] for p in q.corners) / 4.0))
    if not (0 <= cx < w and 0 <= cy < h):
        raise ValueError("quad centroid outside image")
    if single_pixel:
        vals = img[cy, cx].astype(np.float64)
    else:
        patch = img[max(cy - 1, 0) : cy + 2, max(cx - 1, 0) : cx + 2]
        vals = np.median(patch.reshape(-1, 3).astype(np.float64), axis=0)
    top, second = np.sort(vals)[::-1][:2]
    if top - second < ambiguous_threshold:
        raise AmbiguousColor(f"channel values {tuple(vals)} too close to call")
    return COLOR_ORDER[int(np.argmax(vals))]


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the end-to-end detector needs, with workable defaults.

    The block-stage Hough threshold is lower than the box stage's: block
    sides are an order of magnitude shorter than the box perimeter, and
    rotated sides additionally smear their votes over neighbouring
    angle bins.
    """

    canny: CannyParams = CannyParams()
    hough_box: HoughParams = HoughParams()
    hough_block: HoughParams = HoughParams(accumulator_threshold=18)
    criteria: FilterCriteria = FilterCriteria()
    side_min: float = 20.0
    side_max: float = 60.0
    side_spread_tol: float = 0.25
    ambiguous_threshold: float = 10.0
    single_pixel: bool = False
    legacy_proceed: bool = False


def detect_blocks(
    img: np.ndarray, config: PipelineConfig = PipelineConfig(), seed: int = 0
) -> list[DetectedBlock]:
    """Full pipeline: find the box, rectify, and identify blocks.

    With ``legacy_proceed`` a missing perimeter falls back to running
    stage 2 on the uncorrected camera frame (the historical behaviour
    this package otherwise refuses); in strict mode IncompletePerimeter
    propagates and the frame counts as unusable.
    """
    try:
        box = detect_target_area(img, config.canny, config.hough_box, seed=seed)
        frame = rectify(img, box)
    except IncompletePerimeter:
        if not config.legacy_proceed:
            raise
        frame = np.asarray(img)

    gray = to_grayscale(frame) if frame.ndim == 3 else frame
    edges = canny(gray, config.canny)
    segments = ppht(edges, config.hough_block, seed=seed + 1)
    graph = filter_segments(segments, config.criteria)
    quads = assemble_squares(graph, config.side_min, config.side_max, config.side_spread_tol)

    found: list[DetectedBlock] = []
    for quad in quads:
        try:
            color = classify_color(
                frame, quad, config.ambiguous_threshold, config.single_pixel
            )
        except AmbiguousColor as exc:
            logger.info("dropping block with ambiguous colour: %s", exc)
            continue
        sides = [
            math.dist(quad.corners[k], quad.corners[(k + 1) % 4]) for k in range(4)
        ]
        found.append(DetectedBlock(top=quad, color=color, side_length=sum(sides) / 4.0))
    found.sort(key=lambda b: (round(b.centroid[1], 3), round(b.centroid[0], 3)))
    return found


_OVERLAY_TINT = {
    BlockColor.RED: (255, 0, 0),
    BlockColor.GREEN: (0, 255, 0),
    BlockColor.BLUE: (0, 80, 255),
}


def draw_blocks_overlay(frame: np.ndarray, blocks: list[DetectedBlock]) -> np.ndarray:
    """Annotate a frame with the detected block quads, tinted per color."""
    from . import draw  # local import keeps the pipeline modules decoupled

    out = np.asarray(frame).copy()
    if out.ndim == 2:
        out = np.stack([out] * 3, axis=-1)
    for block in blocks:
        draw.draw_polygon_outline(out, block.top.corners, _OVERLAY_TINT[block.color], 2.0)
        draw.draw_cross(out, block.centroid, _OVERLAY_TINT[block.color], 3)
    return out


def detection_to_dict(frame_id: int, blocks: list[DetectedBlock]) -> dict:
    """Detection JSON payload (stable key order, rounded coordinates)."""
    return {
        "frameId": frame_id,
        "blocks": [
            {
                "corners": [[round(x, 2), round(y, 2)] for x, y in b.top.corners],
                "color": b.color.value,
                "side": round(b.side_length, 2),
            }
            for b in blocks
        ],
        "aborted": False,
        "abortReason": None,
    }


def aborted_detection_dict(frame_id: int, reason: str) -> dict:
    return {"frameId": frame_id, "blocks": [], "aborted": True, "abortReason": reason}


def analyze_frame(
    img: np.ndarray,
    config: PipelineConfig = PipelineConfig(),
    frame_id: int = 0,
    seed: int = 0,
) -> dict:
    """detect_blocks wrapped into the interchange dict, abort included."""
    try:
        blocks = detect_blocks(img, config, seed=seed)
    except (IncompletePerimeter, DegenerateQuad, SingularSystem) as exc:
        return aborted_detection_dict(frame_id, str(exc))
    return detection_to_dict(frame_id, blocks)
