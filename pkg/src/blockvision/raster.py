"""Pixel-level primitives, written from scratch on plain numpy arrays.

Images are numpy arrays throughout: RGB frames are (h, w, 3) uint8,
gray frames (h, w) uint8, edge maps (h, w) bool. The functions here are
the whole low-level vision stack: grayscale conversion, separable
Gaussian smoothing, Canny edge detection, and a progressive
probabilistic Hough transform. Everything is deterministic; the Hough
stage takes an explicit seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfig
from .geometry import LineSegment
from .rng import SplitMix64


@dataclass(frozen=True)
class CannyParams:
    blur_sigma: float = 1.4
    low_threshold: float = 50.0
    high_threshold: float = 150.0

    def __post_init__(self):
        if self.blur_sigma < 0:
            raise InvalidConfig("blur_sigma must be >= 0")
        if not 0 <= self.low_threshold <= self.high_threshold:
            raise InvalidConfig("need 0 <= low_threshold <= high_threshold")


@dataclass(frozen=True)
class HoughParams:
    distance_resolution: float = 1.0
    angle_resolution: float = math.pi / 180.0
    accumulator_threshold: int = 30
    min_line_length: float = 15.0
    max_line_gap: float = 5.0

    def __post_init__(self):
        for name in (
            "distance_resolution",
            "angle_resolution",
            "accumulator_threshold",
            "min_line_length",
            "max_line_gap",
        ):
            if getattr(self, name) <= 0:
                raise InvalidConfig(f"{name} must be strictly positive")


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """ITU-R 601 luma: round(0.299 R + 0.587 G + 0.114 B), uint8.

    Already-gray input passes through unchanged (as a copy).
    """
    img = np.asarray(img)
    if img.ndim == 2:
        return img.astype(np.uint8, copy=True)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("expected an (h, w, 3) RGB array")
    rgb = img.astype(np.float64)
    lum = 0.299 * rgb[:, :, 0] + 0.587 * rgb[:, :, 1] + 0.114 * rgb[:, :, 2]
    return np.rint(lum).astype(np.uint8)


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(offsets**2) / (2.0 * sigma * sigma))
    return k / k.sum()


def _convolve_separable(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Row then column pass with replicate (edge-clamp) borders."""
    r = len(kernel) // 2
    h, w = img.shape
    padded = np.pad(img, ((0, 0), (r, r)), mode="edge")
    rows = np.zeros((h, w), dtype=np.float64)
    for i, weight in enumerate(kernel):
        rows += weight * padded[:, i : i + w]
    padded = np.pad(rows, ((r, r), (0, 0)), mode="edge")
    out = np.zeros((h, w), dtype=np.float64)
    for i, weight in enumerate(kernel):
        out += weight * padded[i : i + h, :]
    return out


def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian, kernel radius ceil(3*sigma). sigma=0 is identity.

    Output dtype follows the input: uint8 in, rounded uint8 out; float
    in, float out.
    """
    if sigma < 0:
        raise InvalidConfig("sigma must be >= 0")
    img = np.asarray(img)
    if sigma == 0:
        return img.copy()
    out = _convolve_separable(img.astype(np.float64), _gaussian_kernel(sigma))
    if img.dtype == np.uint8:
        return np.rint(out).astype(np.uint8)
    return out


def sobel(gray: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Raw 3x3 Sobel derivatives (gx, gy), replicate borders, float64.

    No normalisation is applied, so a full 0-255 step peaks at 1020;
    thresholds elsewhere in the package are stated on this raw scale.
    """
    a = np.pad(np.asarray(gray, dtype=np.float64), 1, mode="edge")
    h, w = gray.shape
    tl, tc, tr = a[0:h, 0:w], a[0:h, 1 : w + 1], a[0:h, 2 : w + 2]
    ml, mr = a[1 : h + 1, 0:w], a[1 : h + 1, 2 : w + 2]
    bl, bc, br = a[2 : h + 2, 0:w], a[2 : h + 2, 1 : w + 1], a[2 : h + 2, 2 : w + 2]
    gx = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl)
    gy = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr)
    return gx, gy


def _nonmax_suppress(mag: np.ndarray, gx: np.ndarray, gy: np.ndarray) -> np.ndarray:
    """Thin ridges to one pixel along the quantized gradient direction.

    Four direction bins; a pixel survives when it beats the neighbour in
    the forward (gradient) direction strictly and the backward neighbour
    at least ties. The asymmetric tie rule keeps exactly one of two
    equal-magnitude columns on a symmetric step.
    """
    ang = np.degrees(np.arctan2(gy, gx)) % 180.0
    dx = np.select(
        [ang < 22.5, ang < 67.5, ang < 112.5, ang < 157.5], [1, 1, 0, -1], default=1
    )
    dy = np.select(
        [ang < 22.5, ang < 67.5, ang < 112.5, ang < 157.5], [0, 1, 1, 1], default=0
    )
    forward = np.where(gx * dx + gy * dy >= 0, 1, -1)
    fdx, fdy = forward * dx, forward * dy

    padded = np.pad(mag, 1, mode="constant")
    ys, xs = np.indices(mag.shape)
    ahead = padded[ys + 1 + fdy, xs + 1 + fdx]
    behind = padded[ys + 1 - fdy, xs + 1 - fdx]
    return (mag > ahead) & (mag >= behind) & (mag > 0)


def _hysteresis(weak: np.ndarray, strong: np.ndarray) -> np.ndarray:
    """Keep strong pixels plus weak pixels 8-connected to them."""
    result = strong.copy()
    frontier = strong
    while frontier.any():
        p = np.pad(frontier, 1, mode="constant")
        grown = (
            p[:-2, :-2] | p[:-2, 1:-1] | p[:-2, 2:]
            | p[1:-1, :-2] | p[1:-1, 2:]
            | p[2:, :-2] | p[2:, 1:-1] | p[2:, 2:]
        )
        frontier = grown & weak & ~result
        result |= frontier
    return result


def canny(gray: np.ndarray, params: CannyParams = CannyParams()) -> np.ndarray:
    """Canny edge detection: blur, Sobel, NMS, two-threshold hysteresis.

    Returns a bool edge map of the same shape. Thresholds apply to the
    raw Sobel gradient magnitude (see :func:`sobel`).
    """
    work = np.asarray(gray, dtype=np.float64)
    if params.blur_sigma > 0:
        work = _convolve_separable(work, _gaussian_kernel(params.blur_sigma))
    gx, gy = sobel(work)
    mag = np.hypot(gx, gy)
    ridge = _nonmax_suppress(mag, gx, gy)
    strong = ridge & (mag >= params.high_threshold)
    weak = ridge & (mag >= params.low_threshold)
    return _hysteresis(weak, strong)


def _walk_line(
    residual: np.ndarray,
    x0: float,
    y0: float,
    dx: float,
    dy: float,
    cdx: int,
    cdy: int,
    start_t: int,
    step: int,
    max_gap: float,
) -> list[tuple[int, int, tuple[int, int]]]:
    """March along a line in unit steps, tracking the pixel chain.

    At each step the walk probes its current lateral offset from the
    ideal ray and the two corridor neighbours (one pixel to either side,
    perpendicular to the walk), re-anchoring on whichever hit. The
    sideways drift of at most one pixel per step absorbs the residual
    tilt left by theta quantization, so long lines are not fragmented.
    The march stops once the distance from the last supporting pixel
    exceeds ``max_gap``. Returns the supported steps as
    (t, offset, (y, x)) tuples.
    """
    h, w = residual.shape
    hits: list[tuple[int, int, tuple[int, int]]] = []
    last_hit_t = start_t
    off = 0
    t = start_t
    while True:
        px = x0 + t * dx
        py = y0 + t * dy
        found = None
        for k in (off, off + 1, off - 1):
            qx = int(round(px + k * cdx))
            qy = int(round(py + k * cdy))
            if 0 <= qy < h and 0 <= qx < w and residual[qy, qx]:
                found = (k, (qy, qx))
                break
        if found is not None:
            off = found[0]
            hits.append((t, off, found[1]))
            last_hit_t = t
        elif abs(t - last_hit_t) > max_gap:
            break
        t += step
    return hits


def ppht(
    edges: np.ndarray, params: HoughParams = HoughParams(), seed: int = 0
) -> list[LineSegment]:
    """Progressive probabilistic Hough transform over a bool edge map.

    Edge pixels are drawn in random order (seeded, so reproducible) and
    voted into a (rho, theta) accumulator. Whenever the vote lands a bin
    at the accumulator threshold, the supporting pixel chain is walked
    through the seed pixel in both directions, tolerating gaps up to
    max_line_gap pixels and a one-pixel sideways corridor. The walked
    run is removed from the map and its votes retracted; it is emitted
    as a segment when it is at least min_line_length long and at least
    70% of its steps sat on edge pixels.
    """
    edges = np.asarray(edges, dtype=bool)
    h, w = edges.shape
    residual = edges.copy()
    voted = np.zeros_like(residual)

    n_theta = max(1, int(round(math.pi / params.angle_resolution)))
    thetas = np.arange(n_theta) * params.angle_resolution
    cos_t = np.cos(thetas)
    sin_t = np.sin(thetas)
    theta_range = np.arange(n_theta)
    rho_res = params.distance_resolution
    rho_off = int(math.ceil(math.hypot(w, h) / rho_res)) + 1
    acc = np.zeros((2 * rho_off + 1, n_theta), dtype=np.int32)

    def bin_rows(x: int, y: int) -> np.ndarray:
        return np.rint((x * cos_t + y * sin_t) / rho_res).astype(np.int64) + rho_off

    pool = [(int(y), int(x)) for y, x in np.argwhere(edges)]
    rng = SplitMix64(seed)
    segments: list[LineSegment] = []

    while pool:
        pick = rng.next_below(len(pool))
        y0, x0 = pool[pick]
        pool[pick] = pool[-1]
        pool.pop()
        if not residual[y0, x0]:
            continue

        rows = bin_rows(x0, y0)
        acc[rows, theta_range] += 1
        voted[y0, x0] = True
        votes = acc[rows, theta_range]
        best = int(np.argmax(votes))
        if votes[best] < params.accumulator_threshold:
            continue

        theta = thetas[best]
        dx, dy = -math.sin(theta), math.cos(theta)
        # Corridor offset perpendicular to the walk direction.
        cdx, cdy = int(round(math.cos(theta))), int(round(math.sin(theta)))

        # The forward walk starts on the seed (t=0), the backward walk
        # just past it (t=-1), so the seed pixel is claimed exactly once.
        hits_fwd = _walk_line(
            residual, x0, y0, dx, dy, cdx, cdy, 0, 1, params.max_line_gap
        )
        hits_bwd = _walk_line(
            residual, x0, y0, dx, dy, cdx, cdy, -1, -1, params.max_line_gap
        )
        hits = hits_bwd[::-1] + hits_fwd

        # The walked run is always consumed, emitted or not; otherwise
        # its votes would keep winning the same bin without progress.
        for _, _, (sy, sx) in hits:
            residual[sy, sx] = False
            if voted[sy, sx]:
                acc[bin_rows(sx, sy), theta_range] -= 1
                voted[sy, sx] = False
        if not hits:
            continue

        t1, off1, _ = hits[0]
        t2, off2, _ = hits[-1]
        p1 = (x0 + t1 * dx + off1 * cdx, y0 + t1 * dy + off1 * cdy)
        p2 = (x0 + t2 * dx + off2 * cdx, y0 + t2 * dy + off2 * cdy)
        if math.dist(p1, p2) < params.min_line_length:
            continue
        if len(hits) / (t2 - t1 + 1) < 0.7:
            continue
        segments.append(LineSegment(p1, p2))

    return segments
