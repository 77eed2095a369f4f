import numpy as np
import pytest

from framepick.config import ConfigError, KeyframeConfig
from framepick.keyframe import (
    Shot,
    compute_frame_metrics,
    detect_shots,
    filter_low_quality,
    hsv_histogram,
    kmeans,
    rgb_histogram,
    segment_subshots,
)
from framepick.model import DomainError

from oracles import histogram_uniformity_reference, ssd_stillness_reference


def solid(r, g, b, h=24, w=32):
    img = np.zeros((h, w, 3), dtype=np.uint8)
    img[..., 0], img[..., 1], img[..., 2] = r, g, b
    return img


class TestFrameMetrics:
    def test_pure_color_luminance(self):
        # Rec.709 coefficients applied to a single saturated channel
        assert compute_frame_metrics(solid(255, 0, 0), None).luminance == pytest.approx(
            0.2126 * 255, abs=1e-6
        )
        assert compute_frame_metrics(solid(0, 255, 0), None).luminance == pytest.approx(
            0.7152 * 255, abs=1e-6
        )
        assert compute_frame_metrics(solid(0, 0, 255), None).luminance == pytest.approx(
            0.0722 * 255, abs=1e-6
        )

    def test_constant_gray_frame(self):
        gray = solid(128, 128, 128)
        m = compute_frame_metrics(gray, gray.copy())
        assert m.sharpness == 0.0
        assert m.uniformity == 1.0
        assert m.stillness == 1.0  # identical previous frame

    def test_no_previous_frame_means_still(self):
        assert compute_frame_metrics(solid(10, 10, 10), None).stillness == 1.0

    def test_uniformity_on_full_ramp(self):
        # 256x1 ramp covering every gray level once: the top 13 of 256
        # equally-populated bins hold 13/256 of the pixels
        ramp = np.arange(256, dtype=np.uint8).reshape(256, 1)
        img = np.stack([ramp, ramp, ramp], axis=2)
        m = compute_frame_metrics(img, None)
        assert m.uniformity == pytest.approx(13 / 256, abs=1e-12)

    def test_uniformity_matches_reference_on_random_frames(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            img = rng.integers(0, 256, size=(20, 30, 3), dtype=np.uint8)
            gray = (
                0.2126 * img[..., 0] + 0.7152 * img[..., 1] + 0.0722 * img[..., 2]
            )
            expected = histogram_uniformity_reference(gray)
            got = compute_frame_metrics(img, None).uniformity
            assert got == pytest.approx(expected, abs=1e-12)

    def test_stillness_matches_ssd_reference(self):
        rng = np.random.default_rng(4)
        a = rng.integers(0, 256, size=(12, 16, 3), dtype=np.uint8)
        b = rng.integers(0, 256, size=(12, 16, 3), dtype=np.uint8)
        gray = lambda im: (
            0.2126 * im[..., 0].astype(float)
            + 0.7152 * im[..., 1]
            + 0.0722 * im[..., 2]
        )
        expected = ssd_stillness_reference(gray(b), gray(a))
        got = compute_frame_metrics(b, a).stillness
        assert got == pytest.approx(expected, rel=1e-9)

    def test_empty_image_rejected(self):
        with pytest.raises(DomainError):
            compute_frame_metrics(np.zeros((0, 0, 3), dtype=np.uint8), None)


class TestLowQualityFilter:
    def cfg(self):
        return KeyframeConfig()

    def metrics_of(self, img, prev=None):
        return compute_frame_metrics(img, prev)

    def test_all_black_dropped(self):
        m = self.metrics_of(solid(0, 0, 0))
        assert filter_low_quality([(0, m)], self.cfg()) == []

    def test_constant_gray_dropped_for_uniformity(self):
        m = self.metrics_of(solid(128, 128, 128))
        assert m.luminance >= 15 and m.uniformity == 1.0
        assert filter_low_quality([(0, m)], self.cfg()) == []

    def test_textured_frame_kept(self):
        rng = np.random.default_rng(5)
        img = rng.integers(60, 200, size=(24, 32, 3), dtype=np.uint8)
        m = self.metrics_of(img)
        assert m.luminance >= 15 and m.sharpness >= 2.0 and m.uniformity <= 0.98
        assert filter_low_quality([(7, m)], self.cfg()) == [7]

    def test_threshold_validation(self):
        cfg = KeyframeConfig(min_luminance=500)
        with pytest.raises(ConfigError):
            filter_low_quality([], cfg)


class TestShotDetection:
    def cfg(self):
        return KeyframeConfig()

    def test_identical_frames_one_shot(self):
        frames = [solid(90, 120, 60)] * 20
        hists = np.stack([rgb_histogram(f) for f in frames])
        shots, transitions = detect_shots(list(range(20)), hists, self.cfg())
        assert len(shots) == 1
        assert shots[0].member_ids == list(range(20))
        assert transitions == set()

    def test_black_to_white_boundary_at_ten(self):
        frames = [solid(0, 0, 0)] * 10 + [solid(255, 255, 255)] * 10
        hists = np.stack([rgb_histogram(f) for f in frames])
        shots, transitions = detect_shots(list(range(20)), hists, self.cfg())
        assert [s.member_ids[0] for s in shots] == [0, 10]
        assert [s.member_ids[-1] for s in shots] == [9, 19]
        assert {9, 10, 11} <= transitions

    def test_alternating_frames_suppressed(self):
        frames = [solid(0, 0, 0) if i % 2 == 0 else solid(255, 255, 255) for i in range(20)]
        hists = np.stack([rgb_histogram(f) for f in frames])
        shots, _ = detect_shots(list(range(20)), hists, self.cfg())
        assert len(shots) <= 20 // 2
        assert all(len(s.member_ids) >= 2 for s in shots)

    def test_single_frame_is_one_shot(self):
        hists = rgb_histogram(solid(1, 2, 3))[None, :]
        shots, _ = detect_shots([42], hists, self.cfg())
        assert len(shots) == 1 and shots[0].first_id == 42

    def test_empty_input(self):
        shots, transitions = detect_shots([], np.zeros((0, 0)), self.cfg())
        assert shots == [] and transitions == set()


class TestSubshots:
    def test_static_shot_single_subshot_earliest_keyframe(self):
        shot = Shot(0, 0, 9, member_ids=list(range(10)))
        feats = np.tile(hsv_histogram(solid(90, 120, 60)), (10, 1))
        stillness = {fid: 1.0 for fid in range(10)}  # all tie
        subshots = segment_subshots(shot, feats, stillness, set(), KeyframeConfig())
        assert len(subshots) == 1
        assert subshots[0].keyframe_id == 0  # tie goes to the earliest

    def test_red_blue_shot_splits_at_color_change(self):
        members = list(range(48))
        shot = Shot(0, 0, 47, member_ids=members)
        red = hsv_histogram(solid(200, 30, 30))
        blue = hsv_histogram(solid(30, 30, 200))
        feats = np.stack([red] * 24 + [blue] * 24)
        stillness = {fid: 0.5 for fid in members}
        subshots = segment_subshots(shot, feats, stillness, set(), KeyframeConfig())
        assert [ss.member_ids for ss in subshots] == [list(range(24)), list(range(24, 48))]

    def test_strictly_maximal_stillness_wins(self):
        shot = Shot(0, 0, 4, member_ids=list(range(5)))
        feats = np.tile(hsv_histogram(solid(10, 200, 10)), (5, 1))
        stillness = {0: 0.4, 1: 0.4, 2: 1.0, 3: 0.4, 4: 0.4}  # frame 2 equals its predecessor
        subshots = segment_subshots(shot, feats, stillness, set(), KeyframeConfig())
        assert subshots[0].keyframe_id == 2

    def test_transition_frames_excluded_from_candidacy(self):
        shot = Shot(0, 0, 4, member_ids=list(range(5)))
        feats = np.tile(hsv_histogram(solid(10, 200, 10)), (5, 1))
        stillness = {0: 0.1, 1: 0.2, 2: 1.0, 3: 0.3, 4: 0.2}
        subshots = segment_subshots(shot, feats, stillness, {2}, KeyframeConfig())
        assert subshots[0].keyframe_id == 3  # best non-transition frame

    def test_all_transition_falls_back_to_members(self):
        shot = Shot(0, 0, 2, member_ids=[0, 1, 2])
        feats = np.tile(hsv_histogram(solid(10, 200, 10)), (3, 1))
        subshots = segment_subshots(
            shot, feats, {0: 0.1, 1: 0.9, 2: 0.1}, {0, 1, 2}, KeyframeConfig()
        )
        assert subshots[0].keyframe_id == 1


class TestKmeans:
    def test_deterministic_for_fixed_seed(self):
        rng = np.random.default_rng(0)
        points = rng.normal(size=(40, 3))
        a = kmeans(points, 4, seed=9)
        b = kmeans(points, 4, seed=9)
        assert np.array_equal(a, b)

    def test_separated_clusters_recovered(self):
        points = np.vstack(
            [np.zeros((10, 2)), np.full((10, 2), 100.0)]
        ) + np.random.default_rng(1).normal(scale=0.1, size=(20, 2))
        labels = kmeans(points, 2, seed=0)
        assert len(set(labels[:10])) == 1
        assert len(set(labels[10:])) == 1
        assert labels[0] != labels[-1]

    def test_k_capped_at_n(self):
        labels = kmeans(np.zeros((3, 2)), 10, seed=0)
        assert len(labels) == 3
