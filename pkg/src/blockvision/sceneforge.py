"""Synthetic box-and-blocks scenes with exact ground truth.

A scene lives in two coordinate systems: the box quad sits in the
camera frame, the blocks are specified in the rectified 400x400 frame
and drawn through the box homography. That way ground truth for the
rectified-space detector falls out by construction.

Renders are deterministic per seed, including the pixel noise, so
fixtures can be frozen byte-for-byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import draw
from .blocks import BlockColor, DetectedBlock
from .boxfind import RECTIFIED_QUAD, RECTIFIED_SIZE
from .errors import InvalidConfig, PlacementFailure
from .geometry import Quad, homography_from_quads, order_corners
from .rng import SplitMix64

CAMERA_W = 640
CAMERA_H = 480

PERIMETER_SHADE = (40, 40, 40)
# Rectification maps the wall's outer edge to the frame boundary, where
# it cannot produce a gradient; re-detection on a rectified frame sees
# the inner edge, thickness * warp scale inside. Keep the stroke thin so
# that stays a small error.
PERIMETER_THICKNESS = 1.5
OUTLINE_THICKNESS = 2.0
# Outline luminance stays within ~25 gray levels of the fill so the
# only Canny-visible contour is the outer background/outline step.
OUTLINE_FACTOR = 0.87

FILL = {
    BlockColor.RED: (220, 40, 40),
    BlockColor.GREEN: (40, 200, 40),
    BlockColor.BLUE: (40, 40, 220),
}


def _outline(fill: tuple[int, int, int]) -> tuple[int, int, int]:
    return tuple(int(round(OUTLINE_FACTOR * c)) for c in fill)


@dataclass(frozen=True)
class BlockSpec:
    center: tuple[float, float]
    side_length: float
    rotation_deg: float
    color: BlockColor

    def corners(self) -> list[tuple[float, float]]:
        h = self.side_length / 2.0
        rad = math.radians(self.rotation_deg)
        c, s = math.cos(rad), math.sin(rad)
        out = []
        for ox, oy in ((-h, -h), (h, -h), (h, h), (-h, h)):
            out.append(
                (self.center[0] + ox * c - oy * s, self.center[1] + ox * s + oy * c)
            )
        return out

    @property
    def circumradius(self) -> float:
        return self.side_length * math.sqrt(2.0) / 2.0


@dataclass(frozen=True)
class PatchSpec:
    """A square-ish painted patch that is not a block (fault type 1)."""

    center: tuple[float, float]
    side_length: float
    rotation_deg: float = 0.0
    fill: tuple[int, int, int] = (220, 40, 40)

    def corners(self) -> list[tuple[float, float]]:
        return BlockSpec(self.center, self.side_length, self.rotation_deg, BlockColor.RED).corners()


@dataclass(frozen=True)
class OccluderSpec:
    """A background-colored rectangle painted over part of the scene."""

    center: tuple[float, float]
    width: float
    height: float

    def corners(self) -> list[tuple[float, float]]:
        hw, hh = self.width / 2.0, self.height / 2.0
        x, y = self.center
        return [(x - hw, y - hh), (x + hw, y - hh), (x + hw, y + hh), (x - hw, y + hh)]


@dataclass(frozen=True)
class SceneSpec:
    box_quad: Quad
    blocks: tuple[BlockSpec, ...] = ()
    background_shade: int = 230
    noise_sigma: float = 0.0
    seed: int = 0
    # Fault-injection extras; empty in clean scenes.
    patches: tuple[PatchSpec, ...] = ()
    occluders: tuple[OccluderSpec, ...] = ()
    perimeter_breaks: tuple[tuple[int, float, float], ...] = ()
    side_face_indices: tuple[int, ...] = ()
    side_face_depth: float = 10.0
    outside_blocks: tuple[BlockSpec, ...] = ()
    wrong_block_index: int | None = None

    def __post_init__(self):
        for b in self.blocks:
            if b.side_length < 10.0:
                raise InvalidConfig("block side below 10 px")
            for x, y in b.corners():
                if not (0.0 <= x <= RECTIFIED_SIZE and 0.0 <= y <= RECTIFIED_SIZE):
                    raise InvalidConfig("block extends outside the rectified area")


def ground_truth(scene: SceneSpec) -> list[DetectedBlock]:
    """What an ideal detector would report, in rectified coordinates."""
    out = []
    for b in scene.blocks:
        out.append(
            DetectedBlock(
                top=order_corners(b.corners()), color=b.color, side_length=b.side_length
            )
        )
    return out


def rectified_to_camera(scene: SceneSpec):
    return homography_from_quads(RECTIFIED_QUAD, scene.box_quad)


def score_detections(
    truth: list[DetectedBlock],
    detected: list[DetectedBlock],
    radius: float = 15.0,
) -> dict:
    """Greedy centroid matching of detections against ground truth.

    Each detection claims the nearest unclaimed truth block within
    ``radius`` pixels.  Returns counts for precision/recall bookkeeping.
    """
    claimed = [False] * len(truth)
    tp = fp = color_ok = 0
    for det in detected:
        dx, dy = det.centroid
        best, best_dist = None, radius
        for i, ref in enumerate(truth):
            if claimed[i]:
                continue
            rx, ry = ref.centroid
            dist = math.hypot(rx - dx, ry - dy)
            if dist <= best_dist:
                best, best_dist = i, dist
        if best is None:
            fp += 1
            continue
        claimed[best] = True
        tp += 1
        if truth[best].color is det.color:
            color_ok += 1
    fn = claimed.count(False)
    return {"tp": tp, "fp": fp, "fn": fn, "color_ok": color_ok}


def _inset_quad(corners, d: float) -> list[tuple[float, float]]:
    """Corners of the polygon whose edges sit ``d`` inside the quad's."""
    cx = sum(p[0] for p in corners) / 4.0
    cy = sum(p[1] for p in corners) / 4.0
    lines = []
    for i in range(4):
        x1, y1 = corners[i]
        x2, y2 = corners[(i + 1) % 4]
        dx, dy = x2 - x1, y2 - y1
        norm = math.hypot(dx, dy)
        nx, ny = -dy / norm, dx / norm
        if (cx - x1) * nx + (cy - y1) * ny < 0:
            nx, ny = -nx, -ny
        lines.append((x1 + d * nx, y1 + d * ny, dx, dy))
    out = []
    for i in range(4):
        ax, ay, adx, ady = lines[i - 1]
        bx, by, bdx, bdy = lines[i]
        den = adx * bdy - ady * bdx
        t = ((bx - ax) * bdy - (by - ay) * bdx) / den
        out.append((ax + t * adx, ay + t * ady))
    return out


def _draw_perimeter(img: np.ndarray, scene: SceneSpec) -> None:
    breaks = {side: (f0, f1) for side, f0, f1 in scene.perimeter_breaks}
    # Stroke the wall fully inside the box edge: rectification maps the
    # quad to the full output frame, and a stroke centred on the edge
    # would be chopped to a sub-pixel sliver (or nothing) there.
    corners = _inset_quad(scene.box_quad.corners, PERIMETER_THICKNESS / 2.0)
    for i in range(4):
        x1, y1 = corners[i]
        x2, y2 = corners[(i + 1) % 4]

        def lerp(f):
            return (x1 + f * (x2 - x1), y1 + f * (y2 - y1))

        pieces = [(0.0, 1.0)]
        if i in breaks:
            f0, f1 = breaks[i]
            pieces = [(0.0, f0), (f1, 1.0)]
        for a, b in pieces:
            if b - a > 1e-6:
                draw.draw_line(img, lerp(a), lerp(b), PERIMETER_SHADE, PERIMETER_THICKNESS)


def _fill_with_outline(img, cam_pts, fill, outline) -> None:
    draw.fill_convex_polygon(img, cam_pts, fill)
    draw.draw_polygon_outline(img, cam_pts, outline, OUTLINE_THICKNESS)


def render_scene(scene: SceneSpec) -> np.ndarray:
    """Rasterize the scene to a camera frame (480x640x3 uint8)."""
    shade = scene.background_shade
    img = np.full((CAMERA_H, CAMERA_W, 3), shade, dtype=np.uint8)
    to_cam = rectified_to_camera(scene)

    _draw_perimeter(img, scene)

    for p in scene.patches:
        _fill_with_outline(img, to_cam.apply(p.corners()), p.fill, _outline(p.fill))

    for idx, b in enumerate(scene.blocks):
        fill = FILL[b.color]
        top = b.corners()
        if idx in scene.side_face_indices:
            # Visible front face fused to the top: fill both, outline
            # only the union so the detector sees one taller silhouette.
            depth = scene.side_face_depth
            face = [
                top[3],
                top[2],
                (top[2][0], top[2][1] + depth),
                (top[3][0], top[3][1] + depth),
            ]
            face_fill = tuple(int(round(0.93 * c)) for c in fill)
            silhouette = [top[0], top[1], (top[2][0], top[2][1] + depth), (top[3][0], top[3][1] + depth)]
            draw.fill_convex_polygon(img, to_cam.apply(top), fill)
            draw.fill_convex_polygon(img, to_cam.apply(face), face_fill)
            draw.draw_polygon_outline(img, to_cam.apply(silhouette), _outline(fill), OUTLINE_THICKNESS)
        else:
            _fill_with_outline(img, to_cam.apply(top), fill, _outline(fill))

    for b in scene.outside_blocks:
        # Camera-frame coordinates on purpose: these sit beyond the
        # target area, where rectified coordinates have no meaning.
        _fill_with_outline(img, np.asarray(b.corners()), FILL[b.color], _outline(FILL[b.color]))

    for occ in scene.occluders:
        draw.fill_convex_polygon(img, to_cam.apply(occ.corners()), (shade, shade, shade))

    if scene.noise_sigma > 0:
        rng = np.random.default_rng(scene.seed)
        noisy = img.astype(np.float64) + rng.normal(0.0, scene.noise_sigma, img.shape)
        img = np.clip(np.rint(noisy), 0, 255).astype(np.uint8)
    return img


def _default_box_quad(rng: SplitMix64, perturbation: int) -> Quad:
    # Edge ranges are chosen so every border midpoint stays in the outer
    # quarter of the camera frame (the region the box finder searches)
    # even after the level-1 corner jitter of up to 25 px.
    x0 = 80.0 + rng.next_below(41)
    y0 = 60.0 + rng.next_below(31)
    x1 = 510.0 + rng.next_below(51)
    y1 = 390.0 + rng.next_below(26)
    pts = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    if perturbation >= 1:
        # Jitter of 25 px over a >=390 px edge tilts it by at most ~10
        # degrees, within the border finder's 15 degree tolerance.
        pts = [
            (x + rng.next_below(51) - 25, y + rng.next_below(51) - 25) for x, y in pts
        ]
    return order_corners(pts)


def random_scene(
    seed: int,
    block_counts: tuple[int, int, int] = (2, 2, 1),
    perturbation: int = 0,
) -> SceneSpec:
    """Seeded scene with non-overlapping blocks.

    ``block_counts`` is (red, green, blue). Perturbation 0 renders
    axis-aligned blocks and a rectangular box with no noise; level 1
    adds rotations up to 30 degrees, box corner skew, and noise sigma 5.
    Placement rejection-samples with a clearance of at least 8 px
    between block hulls; PlacementFailure after 10,000 rejected draws.
    """
    rng = SplitMix64(seed)
    box = _default_box_quad(rng, perturbation)

    wanted: list[BlockColor] = []
    for color, n in zip((BlockColor.RED, BlockColor.GREEN, BlockColor.BLUE), block_counts):
        wanted.extend([color] * n)

    placed: list[BlockSpec] = []
    rejections = 0
    for color in wanted:
        side = 30.0 + rng.next_below(21)
        rotation = 0.0 if perturbation == 0 else float(rng.next_below(61) - 30)
        margin = int(math.ceil(side * math.sqrt(2.0) / 2.0)) + 10
        while True:
            cx = float(margin + rng.next_below(RECTIFIED_SIZE - 2 * margin + 1))
            cy = float(margin + rng.next_below(RECTIFIED_SIZE - 2 * margin + 1))
            candidate = BlockSpec((cx, cy), side, rotation, color)
            clear = all(
                math.dist(candidate.center, other.center)
                >= candidate.circumradius + other.circumradius + 8.0
                for other in placed
            )
            if clear:
                placed.append(candidate)
                break
            rejections += 1
            if rejections > 10_000:
                raise PlacementFailure(
                    f"gave up after {rejections} rejected placements"
                )

    return SceneSpec(
        box_quad=box,
        blocks=tuple(placed),
        noise_sigma=0.0 if perturbation == 0 else 5.0,
        seed=seed,
    )


def inject_fault(scene: SceneSpec, fault: int) -> SceneSpec:
    """Mutate a scene to provoke one of the six documented failure modes.

    1: square-ish painted patch, off-size so the size filter rejects it
    2: occluder hiding half of the first block (undercount)
    3: first block rendered with a fused front face (misaligned quad)
    4: one perimeter line broken (perspective correction impossible)
    5: like 4 plus block-like shapes beyond the target area
    6: an extra block no instruction asked for, persisting across frames
    """
    if fault == 1:
        patch = _place_clear(scene, side=72.0)
        return replace(scene, patches=scene.patches + (patch,))
    if fault == 2:
        if not scene.blocks:
            raise InvalidConfig("fault 2 needs at least one block")
        b = scene.blocks[0]
        occ = OccluderSpec(
            center=(b.center[0], b.center[1] - b.side_length / 4.0),
            width=b.side_length + 14.0,
            height=b.side_length / 2.0 + 7.0,
        )
        return replace(scene, occluders=scene.occluders + (occ,))
    if fault == 3:
        if not scene.blocks:
            raise InvalidConfig("fault 3 needs at least one block")
        # Face depth scales with the block so the fused silhouette still
        # passes the side-spread check and gets (mis)detected.
        depth = round(0.18 * scene.blocks[0].side_length, 1)
        return replace(
            scene,
            side_face_indices=scene.side_face_indices + (0,),
            side_face_depth=depth,
        )
    if fault in (4, 5):
        broken = replace(
            scene, perimeter_breaks=scene.perimeter_breaks + ((0, 0.2, 0.8),)
        )
        if fault == 4:
            return broken
        # Block-like shapes in the strip left of the target area, i.e.
        # the wrong side of the divider.
        left_edge = min(x for x, _ in scene.box_quad.corners)
        cx = max(24.0, left_edge / 2.0)
        outside = (
            BlockSpec((cx, 140.0), 36.0, 0.0, BlockColor.RED),
            BlockSpec((cx, 240.0), 36.0, 0.0, BlockColor.GREEN),
        )
        return replace(broken, outside_blocks=scene.outside_blocks + outside)
    if fault == 6:
        wrong = _place_clear_block(scene, side=40.0, color=BlockColor.GREEN)
        return replace(
            scene,
            blocks=scene.blocks + (wrong,),
            wrong_block_index=len(scene.blocks),
        )
    raise InvalidConfig(f"unknown fault type {fault}")


def _find_clear_spot(scene: SceneSpec, side: float) -> tuple[float, float]:
    rng = SplitMix64(scene.seed ^ 0xFA17)
    radius = side * math.sqrt(2.0) / 2.0
    margin = int(math.ceil(radius)) + 10
    for _ in range(10_000):
        cx = float(margin + rng.next_below(RECTIFIED_SIZE - 2 * margin + 1))
        cy = float(margin + rng.next_below(RECTIFIED_SIZE - 2 * margin + 1))
        if all(
            math.dist((cx, cy), b.center) >= radius + b.circumradius + 8.0
            for b in scene.blocks
        ):
            return (cx, cy)
    raise PlacementFailure("no clear spot for injected element")


def _place_clear(scene: SceneSpec, side: float) -> PatchSpec:
    return PatchSpec(center=_find_clear_spot(scene, side), side_length=side)


def _place_clear_block(scene: SceneSpec, side: float, color: BlockColor) -> BlockSpec:
    return BlockSpec(_find_clear_spot(scene, side), side, 0.0, color)


def scene_to_dict(scene: SceneSpec) -> dict:
    d = {
        "boxQuad": [[x, y] for x, y in scene.box_quad.corners],
        "blocks": [
            {
                "center": list(b.center),
                "side": b.side_length,
                "rotation": b.rotation_deg,
                "color": b.color.value,
            }
            for b in scene.blocks
        ],
        "backgroundShade": scene.background_shade,
        "noiseSigma": scene.noise_sigma,
        "seed": scene.seed,
    }
    if scene.patches:
        d["patches"] = [
            {
                "center": list(p.center),
                "side": p.side_length,
                "rotation": p.rotation_deg,
                "fill": list(p.fill),
            }
            for p in scene.patches
        ]
    if scene.occluders:
        d["occluders"] = [
            {"center": list(o.center), "width": o.width, "height": o.height}
            for o in scene.occluders
        ]
    if scene.perimeter_breaks:
        d["perimeterBreaks"] = [list(b) for b in scene.perimeter_breaks]
    if scene.side_face_indices:
        d["sideFaces"] = list(scene.side_face_indices)
        d["sideFaceDepth"] = scene.side_face_depth
    if scene.outside_blocks:
        d["outsideBlocks"] = [
            {
                "center": list(b.center),
                "side": b.side_length,
                "rotation": b.rotation_deg,
                "color": b.color.value,
            }
            for b in scene.outside_blocks
        ]
    if scene.wrong_block_index is not None:
        d["wrongBlockIndex"] = scene.wrong_block_index
    return d


def scene_from_dict(d: dict) -> SceneSpec:
    def block(rec):
        return BlockSpec(
            tuple(rec["center"]), rec["side"], rec.get("rotation", 0.0), BlockColor(rec["color"])
        )

    return SceneSpec(
        box_quad=order_corners(d["boxQuad"]),
        blocks=tuple(block(r) for r in d.get("blocks", [])),
        background_shade=int(d.get("backgroundShade", 230)),
        noise_sigma=float(d.get("noiseSigma", 0.0)),
        seed=int(d.get("seed", 0)),
        patches=tuple(
            PatchSpec(tuple(p["center"]), p["side"], p.get("rotation", 0.0), tuple(p["fill"]))
            for p in d.get("patches", [])
        ),
        occluders=tuple(
            OccluderSpec(tuple(o["center"]), o["width"], o["height"])
            for o in d.get("occluders", [])
        ),
        perimeter_breaks=tuple(tuple(b) for b in d.get("perimeterBreaks", [])),
        side_face_indices=tuple(d.get("sideFaces", [])),
        side_face_depth=float(d.get("sideFaceDepth", 10.0)),
        outside_blocks=tuple(block(r) for r in d.get("outsideBlocks", [])),
        wrong_block_index=d.get("wrongBlockIndex"),
    )
