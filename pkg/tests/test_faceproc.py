import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from framepick.faceproc import (
    classify_eyes,
    compute_ear,
    expand_bbox,
    face_center,
    smooth_shot_scale,
)
from framepick.keyframe import Shot
from framepick.model import DomainError, EyeLandmarks, Rect

SIX_OPEN = np.array(
    [[0, 0], [1, 1], [3, 1], [4, 0], [3, -1], [1, -1]], dtype=float
)


def nine_point_eye(ear: float, width: float = 4.0, cx: float = 0.0, cy: float = 0.0):
    """Contour p1..p8 clockwise from the left corner plus pupil, built so
    the nine-point ratio equals ``ear`` exactly."""
    half = width / 2
    v = ear * width / 2  # three equal vertical pairs of height 2v
    pts = [
        (cx - half, cy),
        (cx - half / 2, cy - v),
        (cx, cy - v),
        (cx + half / 2, cy - v),
        (cx + half, cy),
        (cx + half / 2, cy + v),
        (cx, cy + v),
        (cx - half / 2, cy + v),
        (cx, cy),
    ]
    return np.array(pts, dtype=float)


class TestExpandBbox:
    def test_spec_example(self):
        got = expand_bbox(Rect(100, 100, 100, 100), 1000, 1000, 1.2)
        assert got == Rect(90, 90, 120, 120)

    def test_corner_clamp(self):
        got = expand_bbox(Rect(0, 0, 100, 100), 500, 500, 1.2)
        assert got.x >= 0 and got.y >= 0
        assert got.x2 <= 500 and got.y2 <= 500

    def test_factor_one_is_identity(self):
        box = Rect(37, 12, 55, 41)
        assert expand_bbox(box, 200, 200, 1.0) == box

    @given(
        x=st.integers(50, 100),
        y=st.integers(50, 100),
        w=st.integers(2, 60),
        h=st.integers(2, 60),
    )
    def test_roundtrip_without_clamping(self, x, y, w, h):
        box = Rect(x, y, w, h)
        grown = expand_bbox(box, 1000, 1000, 1.2)
        back = expand_bbox(grown, 1000, 1000, 1 / 1.2)
        assert back == box


class TestComputeEar:
    def test_six_point_fixture(self):
        assert compute_ear(SIX_OPEN, "six-point") == 0.5

    def test_degenerate_closed_eye(self):
        flat = SIX_OPEN.copy()
        flat[:, 1] = 0.0
        assert compute_ear(flat, "six-point") == 0.0

    def test_nine_point_construction(self):
        assert compute_ear(nine_point_eye(0.35), "nine-point") == pytest.approx(0.35)

    def test_zero_horizontal_span(self):
        pts = np.zeros((6, 2))
        with pytest.raises(DomainError):
            compute_ear(pts, "six-point")

    @settings(max_examples=80, deadline=None)
    @given(
        angle=st.floats(0, 2 * math.pi, allow_nan=False),
        scale=st.floats(0.05, 50.0, allow_nan=False),
        dx=st.floats(-100, 100, allow_nan=False),
        dy=st.floats(-100, 100, allow_nan=False),
    )
    def test_rigid_transform_invariance(self, angle, scale, dx, dy):
        rot = np.array(
            [[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]]
        )
        moved = SIX_OPEN @ rot.T * scale + np.array([dx, dy])
        assert compute_ear(moved, "six-point") == pytest.approx(0.5, abs=1e-9)


class TestClassifyEyes:
    def make(self, left_ear, right_ear):
        left = None if left_ear is None else nine_point_eye(left_ear, cx=-5)
        right = None if right_ear is None else nine_point_eye(right_ear, cx=5)
        return EyeLandmarks(scheme="nine-point", left_eye=left, right_eye=right)

    def test_both_open(self):
        state = classify_eyes(self.make(0.30, 0.31))
        assert not state.closed and state.known

    def test_min_rule_wink_counts_closed(self):
        state = classify_eyes(self.make(0.30, 0.10))
        assert state.closed

    def test_threshold_is_strict_below(self):
        assert classify_eyes(self.make(0.19, 0.35)).closed
        assert not classify_eyes(self.make(0.20, 0.35)).closed

    def test_one_eye_missing_uses_other(self):
        state = classify_eyes(self.make(None, 0.12))
        assert state.closed and state.known
        assert state.ear_left is None

    def test_no_landmarks_open_but_unknown(self):
        assert classify_eyes(None) == classify_eyes(self.make(None, None))
        state = classify_eyes(None)
        assert not state.closed and not state.known


class TestFaceCenter:
    def test_pupil_midpoint(self):
        lm = EyeLandmarks(
            scheme="nine-point",
            left_eye=nine_point_eye(0.3, cx=10.0, cy=10.0),
            right_eye=nine_point_eye(0.3, cx=20.0, cy=10.0),
        )
        center, fallback = face_center(lm, Rect(0, 0, 100, 100))
        assert center == (15.0, 10.0)
        assert not fallback

    def test_six_point_falls_back_to_bbox_center(self):
        lm = EyeLandmarks(scheme="six-point", left_eye=SIX_OPEN, right_eye=SIX_OPEN + [10, 0])
        center, fallback = face_center(lm, Rect(10, 20, 30, 40))
        assert center == (25.0, 40.0)
        assert fallback

    def test_crop_offset_translation(self):
        lm = EyeLandmarks(
            scheme="nine-point",
            left_eye=nine_point_eye(0.3, cx=110.0, cy=60.0),
            right_eye=nine_point_eye(0.3, cx=130.0, cy=60.0),
        )
        (cx, cy), _ = face_center(lm, Rect(100, 50, 50, 50))
        crop_offset = (100, 40)
        assert (cx - crop_offset[0], cy - crop_offset[1]) == (20.0, 20.0)


def _shot(shot_id, ids):
    return Shot(shot_id, ids[0], ids[-1], member_ids=list(ids))


class TestSmoothShotScale:
    def test_majority_wins(self):
        labels = {0: "close-up", 1: "close-up", 2: "medium"}
        times = {0: 0.0, 1: 1.0, 2: 2.0}
        out = smooth_shot_scale(labels, [_shot(0, [0, 1, 2])], times)
        assert out == {0: "close-up", 1: "close-up", 2: "close-up"}

    def test_tie_goes_to_midpoint_nearest(self):
        labels = {0: "close-up", 3: "medium"}
        times = {0: 0.0, 1: 1.0, 2: 2.0, 3: 3.0}
        out = smooth_shot_scale(labels, [_shot(0, [0, 1, 2, 3])], times)
        # midpoint 1.5: frame 3 (medium) is 1.5 away, frame 0 is 1.5 away;
        # equal distances resolve alphabetically -> close-up
        assert set(out.values()) == {"close-up"}

        times2 = {0: 0.0, 1: 1.0, 2: 2.0, 3: 1.8}
        out2 = smooth_shot_scale(labels, [_shot(0, [0, 1, 2, 3])], times2)
        # midpoint 1.0: frame 3 (medium) at distance 0.8 beats frame 0 at 1.0
        assert set(out2.values()) == {"medium"}

    def test_single_frame_shot_unchanged(self):
        out = smooth_shot_scale({5: "long"}, [_shot(0, [5])], {5: 0.0})
        assert out == {5: "long"}

    def test_labels_spread_to_unlabeled_members(self):
        labels = {0: "long", 2: "long"}
        times = {i: float(i) for i in range(4)}
        out = smooth_shot_scale(labels, [_shot(0, [0, 1, 2, 3])], times)
        assert out == {i: "long" for i in range(4)}

    def test_changes_only_at_shot_boundaries(self):
        labels = {0: "long", 1: "medium", 2: "medium", 3: "close-up", 4: "close-up", 5: "long"}
        times = {i: float(i) for i in range(6)}
        shots = [_shot(0, [0, 1, 2]), _shot(1, [3, 4, 5])]
        out = smooth_shot_scale(labels, shots, times)
        assert out[0] == out[1] == out[2] == "medium"
        assert out[3] == out[4] == out[5] == "close-up"
