"""Downsampling stage: per-frame quality metrics, low-quality filtering,
shot boundary detection, subshot segmentation, stillness-based keyframe
selection.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import cv2
import numpy as np

from .config import ConfigError, KeyframeConfig
from .images import LUMA_B, LUMA_G, LUMA_R, to_gray
from .model import DomainError, FrameMetrics

log = logging.getLogger(__name__)


@dataclass
class Shot:
    shot_id: int
    first_id: int  # frame id of first member (inclusive)
    last_id: int   # frame id of last member (inclusive)
    confidence: float = 1.0
    member_ids: list[int] = field(default_factory=list)


@dataclass
class Subshot:
    subshot_id: int
    shot_id: int
    member_ids: list[int]
    keyframe_id: int


def compute_frame_metrics(image: np.ndarray, previous: np.ndarray | None,
                          top_fraction: float = 0.05) -> FrameMetrics:
    """Quality metrics on a letterbox-free 8-bit RGB frame.

    luminance: mean 0.2126 R + 0.7152 G + 0.0722 B over pixels.
    sharpness: mean central-difference gradient magnitude of the grayscale.
    uniformity: pixel fraction covered by the top 5% most-populated bins of
        the 256-bin grayscale histogram (high = too uniform).
    stillness: 1 / (1 + SSD(frame, previous)/pixel_count) on grayscale,
        1.0 when there is no previous frame.
    """
    if image.size == 0:
        raise DomainError("empty image")
    img = image.astype(np.float64)
    luminance = float(
        (LUMA_R * img[..., 0] + LUMA_G * img[..., 1] + LUMA_B * img[..., 2]).mean()
    )

    gray = to_gray(image)
    gy = np.gradient(gray, axis=0) if gray.shape[0] > 1 else np.zeros_like(gray)
    gx = np.gradient(gray, axis=1) if gray.shape[1] > 1 else np.zeros_like(gray)
    sharpness = float(np.hypot(gx, gy).mean())

    # histogram the 8-bit gray level; rounding keeps equal-channel pixels
    # in their nominal bin instead of straddling a float bin edge
    levels = np.clip(np.round(gray), 0, 255).astype(np.int64)
    hist = np.bincount(levels.ravel(), minlength=256)
    top_bins = max(1, math.ceil(top_fraction * 256))
    counts = np.sort(hist)[::-1]
    uniformity = float(counts[:top_bins].sum() / gray.size)

    if previous is None:
        stillness = 1.0
    else:
        if previous.shape != image.shape:
            raise DomainError(
                f"frame shapes differ: {image.shape} vs {previous.shape}"
            )
        diff = gray - to_gray(previous)
        ssd = float(np.square(diff).sum())
        stillness = 1.0 / (1.0 + ssd / gray.size)

    return FrameMetrics(
        luminance=luminance,
        sharpness=sharpness,
        uniformity=uniformity,
        stillness=stillness,
    )


def filter_low_quality(
    frame_metrics: list[tuple[int, FrameMetrics]], config: KeyframeConfig
) -> list[int]:
    """Drop dark, blurry, or overly uniform frames; returns kept frame ids."""
    if not 0 <= config.min_luminance <= 255:
        raise ConfigError(f"min_luminance outside [0,255]: {config.min_luminance}")
    if config.min_sharpness < 0:
        raise ConfigError(f"min_sharpness must be >= 0: {config.min_sharpness}")
    if not 0 <= config.max_uniformity <= 1:
        raise ConfigError(f"max_uniformity outside [0,1]: {config.max_uniformity}")
    kept = []
    for frame_id, m in frame_metrics:
        if m.luminance < config.min_luminance:
            continue
        if m.sharpness < config.min_sharpness:
            continue
        if m.uniformity > config.max_uniformity:
            continue
        kept.append(frame_id)
    return kept


def rgb_histogram(image: np.ndarray, bins_per_channel: int = 16) -> np.ndarray:
    """Normalized joint RGB histogram with bins_per_channel^3 cells."""
    b = bins_per_channel
    q = (image.astype(np.int64) * b) >> 8  # uint8 -> [0, b)
    idx = (q[..., 0] * b + q[..., 1]) * b + q[..., 2]
    hist = np.bincount(idx.ravel(), minlength=b * b * b).astype(np.float64)
    return hist / hist.sum()


def hsv_histogram(image: np.ndarray, bins: tuple[int, int, int] = (8, 4, 4)) -> np.ndarray:
    """Normalized coarse HSV histogram used as the subshot feature."""
    hsv = cv2.cvtColor(image, cv2.COLOR_RGB2HSV)
    hb, sb, vb = bins
    h = np.minimum(hsv[..., 0].astype(np.int64) * hb // 180, hb - 1)
    s = hsv[..., 1].astype(np.int64) * sb >> 8
    v = hsv[..., 2].astype(np.int64) * vb >> 8
    idx = (h * sb + s) * vb + v
    hist = np.bincount(idx.ravel(), minlength=hb * sb * vb).astype(np.float64)
    return hist / hist.sum()


def histogram_intersection_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(1.0 - np.minimum(a, b).sum())


def detect_shots(
    frame_ids: list[int],
    histograms: np.ndarray,
    config: KeyframeConfig,
) -> tuple[list[Shot], set[int]]:
    """Adaptive shot boundary detection over the kept-frame sequence.

    A boundary lands between consecutive kept frames when their histogram
    intersection distance exceeds max(mu + k*sigma, min_boundary_distance)
    over a sliding window of preceding distances. Boundaries that would
    create a shot shorter than min_shot_length are suppressed. Returns the
    shot list plus the frame ids flagged as boundary transitions (excluded
    from keyframe candidacy).
    """
    m = len(frame_ids)
    if m == 0:
        return [], set()
    if m == 1:
        return [Shot(0, frame_ids[0], frame_ids[0], member_ids=list(frame_ids))], set()

    dists = np.array(
        [
            histogram_intersection_distance(histograms[i - 1], histograms[i])
            for i in range(1, m)
        ]
    )

    boundaries = []  # kept-frame index where a new shot starts
    confidences = {}
    last = 0
    for i in range(1, m):
        window = dists[max(0, i - 1 - config.boundary_window) : i - 1]
        if window.size == 0:
            continue  # no baseline yet; min_shot_length covers the lead-in
        threshold = max(
            float(window.mean() + config.boundary_sigma * window.std()),
            config.min_boundary_distance,
        )
        d = float(dists[i - 1])
        if d <= threshold:
            continue
        if i - last < config.min_shot_length or m - i < config.min_shot_length:
            continue
        boundaries.append(i)
        confidences[i] = d
        last = i

    shots = []
    transition_ids: set[int] = set()
    starts = [0] + boundaries
    ends = boundaries + [m]
    for sid, (s, e) in enumerate(zip(starts, ends)):
        members = frame_ids[s:e]
        conf = confidences.get(s, 1.0)
        shots.append(
            Shot(sid, members[0], members[-1], confidence=conf, member_ids=members)
        )
    for b in boundaries:
        for j in (b - 1, b, b + 1):
            if 0 <= j < m:
                transition_ids.add(frame_ids[j])
    return shots, transition_ids


def kmeans(points: np.ndarray, k: int, seed: int = 0, max_iter: int = 50) -> np.ndarray:
    """Deterministic k-means: seeded farthest-point init, ties to the
    lowest center index. Non-convergence keeps the last assignment.
    """
    n = points.shape[0]
    k = min(k, n)
    rng = np.random.default_rng(seed)
    centers = [int(rng.integers(n))]
    min_dist = np.linalg.norm(points - points[centers[0]], axis=1)
    while len(centers) < k:
        nxt = int(np.argmax(min_dist))
        centers.append(nxt)
        min_dist = np.minimum(min_dist, np.linalg.norm(points - points[nxt], axis=1))
    centroids = points[centers].astype(np.float64)

    labels = np.zeros(n, dtype=np.int64)
    for it in range(max_iter):
        d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new_labels = np.argmin(d2, axis=1)
        if it > 0 and np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
        for c in range(k):
            mask = labels == c
            if mask.any():
                centroids[c] = points[mask].mean(axis=0)
    else:
        log.warning("k-means did not converge in %d iterations; keeping assignment", max_iter)
    return labels


def segment_subshots(
    shot: Shot,
    features: np.ndarray,
    stillness: dict[int, float],
    transition_ids: set[int],
    config: KeyframeConfig,
    first_subshot_id: int = 0,
) -> list[Subshot]:
    """Split a shot into contiguous subshots and pick one keyframe each.

    k-means (k = ceil(len/target_subshot_len)) clusters the per-frame HSV
    features; each maximal run of frames sharing a cluster label becomes a
    subshot. The keyframe is the max-stillness member (ties to the earliest
    frame); transition frames are skipped unless the whole run is flagged.
    """
    members = shot.member_ids
    if not members:
        return []
    k = max(1, math.ceil(len(members) / config.target_subshot_len))
    labels = kmeans(features, k, seed=config.kmeans_seed, max_iter=config.kmeans_max_iter)

    runs: list[list[int]] = []
    for i, fid in enumerate(members):
        if i > 0 and labels[i] == labels[i - 1]:
            runs[-1].append(fid)
        else:
            runs.append([fid])

    subshots = []
    for offset, run in enumerate(runs):
        candidates = [fid for fid in run if fid not in transition_ids] or run
        key = max(candidates, key=lambda fid: (stillness[fid], -fid))
        subshots.append(
            Subshot(
                subshot_id=first_subshot_id + offset,
                shot_id=shot.shot_id,
                member_ids=run,
                keyframe_id=key,
            )
        )
    return subshots
