"""Minimal binary Netpbm codecs plus a PNG passthrough.

Edge maps dump as PBM (P4, set bit = edge pixel), gray images as PGM
(P5), RGB frames as PPM (P6, maxval 255). The binary formats are
hand-rolled so dumps stay byte-stable across library versions; PNG goes
through Pillow.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image as PILImage


def _read_tokens(data: bytes, count: int, start: int) -> tuple[list[int], int]:
    """Read whitespace-separated header ints, skipping # comments."""
    tokens: list[int] = []
    i = start
    while len(tokens) < count:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace():
            j += 1
        if j == i:
            raise ValueError("truncated netpbm header")
        tokens.append(int(data[i:j]))
        i = j
    return tokens, i + 1  # skip the single whitespace after the header


def save_pbm(edges: np.ndarray, path) -> None:
    edges = np.asarray(edges, dtype=bool)
    h, w = edges.shape
    packed = np.packbits(edges, axis=1)
    Path(path).write_bytes(b"P4\n%d %d\n" % (w, h) + packed.tobytes())


def load_pbm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(b"P4"):
        raise ValueError("not a binary PBM file")
    (w, h), offset = _read_tokens(data, 2, 2)
    row_bytes = (w + 7) // 8
    raw = np.frombuffer(data[offset : offset + h * row_bytes], dtype=np.uint8)
    bits = np.unpackbits(raw.reshape(h, row_bytes), axis=1)[:, :w]
    return bits.astype(bool)


def save_pgm(gray: np.ndarray, path) -> None:
    gray = np.asarray(gray, dtype=np.uint8)
    h, w = gray.shape
    Path(path).write_bytes(b"P5\n%d %d\n255\n" % (w, h) + gray.tobytes())


def load_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(b"P5"):
        raise ValueError("not a binary PGM file")
    (w, h, maxval), offset = _read_tokens(data, 3, 2)
    if maxval != 255:
        raise ValueError("only 8-bit PGM supported")
    raw = np.frombuffer(data[offset : offset + h * w], dtype=np.uint8)
    return raw.reshape(h, w).copy()


def save_ppm(img: np.ndarray, path) -> None:
    img = np.asarray(img, dtype=np.uint8)
    h, w, _ = img.shape
    Path(path).write_bytes(b"P6\n%d %d\n255\n" % (w, h) + img.tobytes())


def ppm_from_bytes(data: bytes) -> np.ndarray:
    if not data.startswith(b"P6"):
        raise ValueError("not a binary PPM file")
    (w, h, maxval), offset = _read_tokens(data, 3, 2)
    if maxval != 255:
        raise ValueError("only 8-bit PPM supported")
    if len(data) < offset + h * w * 3:
        raise ValueError("truncated PPM payload")
    raw = np.frombuffer(data[offset : offset + h * w * 3], dtype=np.uint8)
    return raw.reshape(h, w, 3).copy()


def load_ppm(path) -> np.ndarray:
    return ppm_from_bytes(Path(path).read_bytes())


def save_image(img: np.ndarray, path) -> None:
    """Dispatch on extension: .pbm/.pgm/.ppm are native, rest go to PIL."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pbm":
        save_pbm(img, path)
    elif suffix == ".pgm":
        save_pgm(img, path)
    elif suffix == ".ppm":
        save_ppm(img, path)
    else:
        PILImage.fromarray(np.asarray(img, dtype=np.uint8)).save(path)


def load_image(path) -> np.ndarray:
    suffix = Path(path).suffix.lower()
    if suffix == ".pbm":
        return load_pbm(path)
    if suffix == ".pgm":
        return load_pgm(path)
    if suffix == ".ppm":
        return load_ppm(path)
    return np.asarray(PILImage.open(path).convert("RGB"))
