"""Tests for the synthetic scene generator.

The generator is itself the oracle for the detector tests, so its own
invariants get checked the hard way: re-derived clearances, re-projected
centroid pixels, and structural round trips.
"""

import dataclasses
import math

import numpy as np
import pytest

from blockvision import (
    BlockColor,
    InvalidConfig,
    PlacementFailure,
    Quad,
    classify_color,
    homography_from_quads,
    warp,
)
from blockvision.boxfind import RECTIFIED_QUAD, RECTIFIED_SIZE
from blockvision.sceneforge import (
    CAMERA_H,
    CAMERA_W,
    FILL,
    BlockSpec,
    DetectedBlock,
    OccluderSpec,
    SceneSpec,
    ground_truth,
    inject_fault,
    random_scene,
    rectified_to_camera,
    render_scene,
    scene_from_dict,
    scene_to_dict,
    score_detections,
)


def truth_rectify(scene, img):
    """Warp using the scene's own quad, bypassing detection entirely."""
    h = homography_from_quads(scene.box_quad, RECTIFIED_QUAD)
    return warp(img, h, RECTIFIED_SIZE, RECTIFIED_SIZE)


class TestRandomScene:
    def test_block_counts_respected(self):
        scene = random_scene(300, block_counts=(3, 2, 1))
        by_color = {c: 0 for c in BlockColor}
        for b in scene.blocks:
            by_color[b.color] += 1
        assert by_color[BlockColor.RED] == 3
        assert by_color[BlockColor.GREEN] == 2
        assert by_color[BlockColor.BLUE] == 1

    def test_empty_scene(self):
        scene = random_scene(301, block_counts=(0, 0, 0))
        assert scene.blocks == ()
        img = render_scene(scene)
        assert img.shape == (CAMERA_H, CAMERA_W, 3)

    def test_same_seed_same_scene(self):
        assert random_scene(302) == random_scene(302)
        assert random_scene(302, perturbation=1) == random_scene(302, perturbation=1)

    def test_different_seeds_differ(self):
        assert random_scene(303) != random_scene(304)

    @pytest.mark.parametrize("seed", range(305, 315))
    def test_pairwise_clearance(self, seed):
        scene = random_scene(seed, block_counts=(3, 3, 2), perturbation=1)
        blocks = scene.blocks
        for i in range(len(blocks)):
            for j in range(i + 1, len(blocks)):
                a, b = blocks[i], blocks[j]
                need = (
                    (a.side_length + b.side_length) * math.sqrt(2.0) / 2.0 + 8.0
                )
                assert math.dist(a.center, b.center) >= need

    @pytest.mark.parametrize("seed", range(315, 325))
    def test_blocks_inside_rectified_area(self, seed):
        scene = random_scene(seed, perturbation=seed % 2)
        for b in scene.blocks:
            for x, y in b.corners():
                assert 0.0 <= x <= RECTIFIED_SIZE
                assert 0.0 <= y <= RECTIFIED_SIZE

    def test_overcrowding_raises(self):
        with pytest.raises(PlacementFailure):
            random_scene(326, block_counts=(20, 20, 20))

    def test_level0_geometry(self):
        scene = random_scene(327, perturbation=0)
        assert scene.noise_sigma == 0.0
        assert all(b.rotation_deg == 0.0 for b in scene.blocks)

    def test_level1_geometry(self):
        scene = random_scene(328, perturbation=1)
        assert scene.noise_sigma == 5.0
        assert all(-30.0 <= b.rotation_deg <= 30.0 for b in scene.blocks)

    def test_spec_invariants_enforced(self):
        box = random_scene(329).box_quad
        with pytest.raises(InvalidConfig):
            SceneSpec(box_quad=box, blocks=(BlockSpec((200, 200), 8.0, 0.0, BlockColor.RED),))
        with pytest.raises(InvalidConfig):
            SceneSpec(box_quad=box, blocks=(BlockSpec((10, 200), 40.0, 0.0, BlockColor.RED),))


class TestRenderScene:
    def test_deterministic_without_noise(self):
        scene = random_scene(330)
        assert np.array_equal(render_scene(scene), render_scene(scene))

    def test_deterministic_with_noise(self):
        scene = random_scene(331, perturbation=1)
        assert scene.noise_sigma > 0
        assert np.array_equal(render_scene(scene), render_scene(scene))

    def test_noise_actually_applied(self):
        scene = random_scene(332)
        noisy = dataclasses.replace(scene, noise_sigma=5.0)
        assert not np.array_equal(render_scene(scene), render_scene(noisy))

    def test_centroid_pixels_are_saturated_fill(self):
        scene = random_scene(333, block_counts=(2, 2, 2))
        img = render_scene(scene)
        rect = truth_rectify(scene, img)
        for b in scene.blocks:
            x, y = int(round(b.center[0])), int(round(b.center[1]))
            assert tuple(rect[y, x]) == FILL[b.color]

    def test_ground_truth_colors_classify_back(self):
        scene = random_scene(334, block_counts=(2, 2, 1))
        rect = truth_rectify(scene, render_scene(scene))
        for block in ground_truth(scene):
            assert classify_color(rect, block.top) is block.color

    def test_ground_truth_matches_spec(self):
        scene = random_scene(335)
        truth = ground_truth(scene)
        assert len(truth) == len(scene.blocks)
        for got, spec in zip(truth, scene.blocks):
            assert got.color is spec.color
            assert got.side_length == pytest.approx(spec.side_length)
            assert math.dist(got.centroid, spec.center) < 1e-9


class TestInjectFault:
    BASE = 340

    def test_distractor_patch(self):
        scene = inject_fault(random_scene(self.BASE), 1)
        assert len(scene.patches) == 1
        assert scene.patches[0].side_length == 72.0

    def test_occluder_covers_first_block(self):
        scene = inject_fault(random_scene(self.BASE), 2)
        assert len(scene.occluders) == 1
        occ = scene.occluders[0]
        b = scene.blocks[0]
        assert math.dist(occ.center, b.center) < b.side_length

    def test_side_face(self):
        scene = inject_fault(random_scene(self.BASE), 3)
        assert scene.side_face_indices == (0,)
        assert scene.side_face_depth == pytest.approx(
            round(0.18 * scene.blocks[0].side_length, 1)
        )

    def test_perimeter_break(self):
        scene = inject_fault(random_scene(self.BASE), 4)
        assert len(scene.perimeter_breaks) == 1
        side, f0, f1 = scene.perimeter_breaks[0]
        assert 0.0 <= f0 < f1 <= 1.0

    def test_wrong_side_blocks(self):
        scene = inject_fault(random_scene(self.BASE), 5)
        assert len(scene.perimeter_breaks) == 1
        assert len(scene.outside_blocks) == 2
        left_edge = min(x for x, _ in scene.box_quad.corners)
        for b in scene.outside_blocks:
            assert b.center[0] < left_edge

    def test_unrequested_block(self):
        base = random_scene(self.BASE)
        scene = inject_fault(base, 6)
        assert len(scene.blocks) == len(base.blocks) + 1
        assert scene.wrong_block_index == len(base.blocks)
        assert scene.blocks[-1].color is BlockColor.GREEN

    def test_faults_deterministic(self):
        for f in range(1, 7):
            assert inject_fault(random_scene(self.BASE), f) == inject_fault(
                random_scene(self.BASE), f
            )

    @pytest.mark.parametrize("bad", (0, 7, -1))
    def test_unknown_fault_rejected(self, bad):
        with pytest.raises(InvalidConfig):
            inject_fault(random_scene(self.BASE), bad)

    def test_faults_needing_blocks_reject_empty(self):
        empty = random_scene(self.BASE, block_counts=(0, 0, 0))
        for f in (2, 3):
            with pytest.raises(InvalidConfig):
                inject_fault(empty, f)


class TestSceneSerialization:
    @pytest.mark.parametrize("fault", [None, 1, 2, 3, 4, 5, 6])
    def test_roundtrip(self, fault):
        scene = random_scene(350, perturbation=1)
        if fault is not None:
            scene = inject_fault(scene, fault)
        assert scene_from_dict(scene_to_dict(scene)) == scene

    def test_dict_is_json_compatible(self):
        import json

        scene = inject_fault(random_scene(351), 5)
        text = json.dumps(scene_to_dict(scene))
        assert scene_from_dict(json.loads(text)) == scene

    def test_clean_scene_omits_fault_keys(self):
        d = scene_to_dict(random_scene(352))
        for key in ("patches", "occluders", "perimeterBreaks", "sideFaces",
                    "outsideBlocks", "wrongBlockIndex"):
            assert key not in d


class TestScoreDetections:
    def mk(self, x, y, color=BlockColor.RED, side=40.0):
        h = side / 2
        quad = Quad(((x - h, y - h), (x + h, y - h), (x + h, y + h), (x - h, y + h)))
        return DetectedBlock(top=quad, color=color, side_length=side)

    def test_perfect_match(self):
        truth = [self.mk(100, 100), self.mk(200, 200, BlockColor.BLUE)]
        s = score_detections(truth, list(truth))
        assert s == {"tp": 2, "fp": 0, "fn": 0, "color_ok": 2}

    def test_miss_and_spurious(self):
        truth = [self.mk(100, 100), self.mk(200, 200)]
        det = [self.mk(100, 100), self.mk(320, 320)]
        s = score_detections(truth, det)
        assert s == {"tp": 1, "fp": 1, "fn": 1, "color_ok": 1}

    def test_wrong_color_still_matches(self):
        truth = [self.mk(100, 100, BlockColor.RED)]
        det = [self.mk(102, 101, BlockColor.GREEN)]
        s = score_detections(truth, det)
        assert s == {"tp": 1, "fp": 0, "fn": 0, "color_ok": 0}

    def test_radius_boundary(self):
        truth = [self.mk(100, 100)]
        inside = score_detections(truth, [self.mk(100, 114.9)])
        outside = score_detections(truth, [self.mk(100, 115.1)])
        assert inside["tp"] == 1
        assert outside == {"tp": 0, "fp": 1, "fn": 1, "color_ok": 0}

    def test_each_truth_claimed_once(self):
        truth = [self.mk(100, 100)]
        det = [self.mk(101, 100), self.mk(99, 100)]
        s = score_detections(truth, det)
        assert s == {"tp": 1, "fp": 1, "fn": 0, "color_ok": 1}

    def test_nearest_unclaimed_wins(self):
        truth = [self.mk(100, 100), self.mk(130, 100)]
        det = [self.mk(112, 100), self.mk(131, 100)]
        s = score_detections(truth, det)
        assert s["tp"] == 2 and s["fp"] == 0 and s["fn"] == 0
