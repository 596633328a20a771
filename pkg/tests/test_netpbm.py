"""Netpbm codecs: round trips, header quirks, and dispatch."""

import numpy as np
import pytest

from blockvision.netpbm import (
    load_image,
    load_pbm,
    load_pgm,
    load_ppm,
    ppm_from_bytes,
    save_image,
    save_pbm,
    save_pgm,
    save_ppm,
)


def test_pbm_roundtrip_odd_width(tmp_path):
    edges = np.random.default_rng(0).random((13, 21)) > 0.5
    path = tmp_path / "edges.pbm"
    save_pbm(edges, path)
    assert np.array_equal(load_pbm(path), edges)


def test_pgm_roundtrip(tmp_path):
    gray = np.random.default_rng(1).integers(0, 256, (17, 9), dtype=np.uint8)
    path = tmp_path / "img.pgm"
    save_pgm(gray, path)
    assert np.array_equal(load_pgm(path), gray)


def test_ppm_roundtrip(tmp_path):
    img = np.random.default_rng(2).integers(0, 256, (7, 11, 3), dtype=np.uint8)
    path = tmp_path / "img.ppm"
    save_ppm(img, path)
    assert np.array_equal(load_ppm(path), img)


def test_header_comments_are_skipped(tmp_path):
    img = np.arange(12, dtype=np.uint8).reshape(2, 2, 3)
    raw = b"P6 # comment\n# another comment\n 2 \n# mid\n2\n255\n" + img.tobytes()
    path = tmp_path / "weird.ppm"
    path.write_bytes(raw)
    assert np.array_equal(load_ppm(path), img)


def test_ppm_from_bytes_rejects_wrong_magic():
    with pytest.raises(ValueError):
        ppm_from_bytes(b"P5\n2 2\n255\n" + bytes(4))


def test_ppm_from_bytes_rejects_truncated_payload():
    with pytest.raises(ValueError):
        ppm_from_bytes(b"P6\n4 4\n255\n" + bytes(10))


def test_non_8bit_maxval_rejected(tmp_path):
    path = tmp_path / "deep.pgm"
    path.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
    with pytest.raises(ValueError):
        load_pgm(path)


def test_save_image_dispatches_by_extension(tmp_path):
    img = np.random.default_rng(3).integers(0, 256, (8, 8, 3), dtype=np.uint8)
    for ext in ("ppm", "png"):
        path = tmp_path / f"img.{ext}"
        save_image(img, path)
        assert np.array_equal(load_image(path), img)


def test_gray_image_via_pgm_dispatch(tmp_path):
    gray = np.random.default_rng(4).integers(0, 256, (6, 10), dtype=np.uint8)
    path = tmp_path / "img.pgm"
    save_image(gray, path)
    assert np.array_equal(load_image(path), gray)
