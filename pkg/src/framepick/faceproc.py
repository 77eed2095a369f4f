"""Face bookkeeping on ingested detections: bbox expansion, eye-aspect-ratio
closed-eye classification, face centers, and shot-scale label smoothing.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import DomainError, EyeLandmarks, Rect


def expand_bbox(bbox: Rect, frame_w: int, frame_h: int, factor: float = 1.2) -> Rect:
    """Grow (or shrink) a box about its center by ``factor`` per side,
    clamped to the frame. Padding splits with the floor half on the
    left/top so expand(expand(b, f), 1/f) round-trips exactly when no
    clamping occurs.
    """
    new_w = int(round(bbox.w * factor))
    new_h = int(round(bbox.h * factor))
    new_w = max(1, new_w)
    new_h = max(1, new_h)
    if new_w >= bbox.w:
        x = bbox.x - (new_w - bbox.w) // 2
    else:
        x = bbox.x + (bbox.w - new_w) // 2
    if new_h >= bbox.h:
        y = bbox.y - (new_h - bbox.h) // 2
    else:
        y = bbox.y + (bbox.h - new_h) // 2
    return Rect(x, y, new_w, new_h).clamped(frame_w, frame_h)


def _ear_six(points: np.ndarray) -> float:
    p1, p2, p3, p4, p5, p6 = points
    horizontal = float(np.linalg.norm(p1 - p4))
    if horizontal == 0:
        raise DomainError("eye landmarks have zero horizontal span")
    vertical = float(np.linalg.norm(p2 - p6) + np.linalg.norm(p3 - p5))
    return vertical / (2.0 * horizontal)


def _ear_nine(points: np.ndarray) -> float:
    # Contour p1..p8 clockwise from the left corner, pupil last.
    p = points
    horizontal = float(np.linalg.norm(p[0] - p[4]))
    if horizontal == 0:
        raise DomainError("eye landmarks have zero horizontal span")
    vertical = float(
        np.linalg.norm(p[1] - p[7])
        + np.linalg.norm(p[2] - p[6])
        + np.linalg.norm(p[3] - p[5])
    )
    return vertical / (3.0 * horizontal)


def compute_ear(points: np.ndarray, scheme: str) -> float:
    """Eye aspect ratio: averaged vertical eyelid distances over the
    horizontal span. Six-point uses two vertical pairs; nine-point
    averages three.
    """
    pts = np.asarray(points, dtype=np.float64)
    if scheme == "six-point":
        if pts.shape != (6, 2):
            raise DomainError(f"six-point scheme needs (6,2) points, got {pts.shape}")
        return _ear_six(pts)
    if scheme == "nine-point":
        if pts.shape != (9, 2):
            raise DomainError(f"nine-point scheme needs (9,2) points, got {pts.shape}")
        return _ear_nine(pts)
    raise DomainError(f"unknown landmark scheme {scheme!r}")


@dataclass(frozen=True)
class EyeState:
    closed: bool
    known: bool  # False when neither eye had usable landmarks
    ear_left: Optional[float] = None
    ear_right: Optional[float] = None


def classify_eyes(landmarks: Optional[EyeLandmarks], threshold: float = 0.2) -> EyeState:
    """Closed iff the lower of the two eye ratios falls below the
    threshold; a single visible eye decides alone, and a face with no
    usable landmarks counts as open but unknown.
    """
    if landmarks is None:
        return EyeState(closed=False, known=False)
    ears = {}
    for side, pts in (("left", landmarks.left_eye), ("right", landmarks.right_eye)):
        if pts is not None:
            ears[side] = compute_ear(pts, landmarks.scheme)
    if not ears:
        return EyeState(closed=False, known=False)
    closed = min(ears.values()) < threshold
    return EyeState(
        closed=closed,
        known=True,
        ear_left=ears.get("left"),
        ear_right=ears.get("right"),
    )


def face_center(
    landmarks: Optional[EyeLandmarks], bbox: Rect
) -> tuple[tuple[float, float], bool]:
    """Face center: the midpoint between the two pupils when the
    nine-point scheme provides them, else the bbox center. Returns
    (point, used_fallback).
    """
    if (
        landmarks is not None
        and landmarks.scheme == "nine-point"
        and landmarks.left_eye is not None
        and landmarks.right_eye is not None
    ):
        left_pupil = landmarks.left_eye[8]
        right_pupil = landmarks.right_eye[8]
        mid = (left_pupil + right_pupil) / 2.0
        return (float(mid[0]), float(mid[1])), False
    return bbox.center(), True


def smooth_shot_scale(
    frame_labels: dict[int, str],
    shots: list,
    timestamps: dict[int, float],
) -> dict[int, str]:
    """Give every frame of a shot the majority label of its labeled
    members. Ties go to the label of the tied-label frame closest to the
    shot's temporal midpoint.
    """
    smoothed: dict[int, str] = {}
    for shot in shots:
        labeled = [(fid, frame_labels[fid]) for fid in shot.member_ids if fid in frame_labels]
        if not labeled:
            continue
        missing = [fid for fid in shot.member_ids if fid not in timestamps]
        if missing:
            raise DomainError(f"frames missing timestamps: {missing}")
        counts: dict[str, int] = {}
        for _, label in labeled:
            counts[label] = counts.get(label, 0) + 1
        top = max(counts.values())
        tied = {label for label, c in counts.items() if c == top}
        if len(tied) == 1:
            winner = tied.pop()
        else:
            times = [timestamps[fid] for fid in shot.member_ids]
            midpoint = (min(times) + max(times)) / 2.0
            _, winner = min(
                (
                    (abs(timestamps[fid] - midpoint), label)
                    for fid, label in labeled
                    if label in tied
                ),
                key=lambda pair: pair[0],
            )
        for fid in shot.member_ids:
            smoothed[fid] = winner
    return smoothed
