"""Letterbox removal and aspect-ratio-constrained crop candidates with
face-aware filtering and a saliency-driven default ranking.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .config import CropConfig, LetterboxConfig
from .images import rect_to_grid
from .model import DomainError, Rect

log = logging.getLogger(__name__)

REJECT_BISECTS_FACE = "bisects-face"
REJECT_SMALL_FACE_EMPHASIS = "small-face-emphasis"
REJECT_OFF_CENTER_SINGLE_FACE = "off-center-single-face"
REJECT_AREA_TOO_SMALL = "area-too-small"

# Fallback preference when every candidate is rejected: mildest first.
_REJECT_SEVERITY = {
    REJECT_AREA_TOO_SMALL: 0,
    REJECT_OFF_CENTER_SINGLE_FACE: 1,
    REJECT_SMALL_FACE_EMPHASIS: 2,
    REJECT_BISECTS_FACE: 3,
}


@dataclass
class LetterboxEstimate:
    top_rows: int
    bottom_rows: int
    sample_size: int
    per_sample: list[tuple[Optional[int], Optional[int]]] = field(default_factory=list)
    all_black: bool = False


@dataclass
class CropCandidate:
    rect: Rect
    aspect: str
    score: float = 0.0
    face_centered: bool = False
    rejected_reason: Optional[str] = None


def _first_content_row(rgb: np.ndarray, nonblack_fraction: float, black_level: int):
    """Per frame: index of the first row from the top and from the bottom
    with at least the required fraction of non-black pixels, or None each
    when no row qualifies.
    """
    nonblack = (rgb.max(axis=2) > black_level).mean(axis=1)
    qualifying = np.flatnonzero(nonblack >= nonblack_fraction)
    if qualifying.size == 0:
        return None, None
    top = int(qualifying[0])
    bottom = int(rgb.shape[0] - 1 - qualifying[-1])
    return top, bottom


def detect_letterbox(frames: list[np.ndarray], config: LetterboxConfig) -> LetterboxEstimate:
    """Median over sampled frames of the first content row from the top
    and bottom. Frames with no qualifying row (all black) drop out of the
    median; an entirely black sample yields (0, 0) with a warning flag.
    """
    if not frames:
        raise DomainError("letterbox detection needs at least one frame")
    per_sample = [
        _first_content_row(f, config.nonblack_fraction, config.black_level)
        for f in frames
    ]
    tops = [t for t, _ in per_sample if t is not None]
    bottoms = [b for _, b in per_sample if b is not None]
    if not tops:
        log.warning("letterbox detection: every sampled frame is all black")
        return LetterboxEstimate(0, 0, len(frames), per_sample, all_black=True)
    top = int(np.median(tops))
    bottom = int(np.median(bottoms))
    height = frames[0].shape[0]
    if top + bottom >= height:
        # Degenerate content sliver; fall back to no bars rather than
        # stripping the whole frame.
        log.warning("letterbox estimate %d+%d covers frame height %d", top, bottom, height)
        top = bottom = 0
    return LetterboxEstimate(top, bottom, len(frames), per_sample)


def sample_frame_ids(frame_ids: list[int], config: LetterboxConfig) -> list[int]:
    """Deterministic sample without replacement for letterbox detection."""
    n = min(config.sample_size, len(frame_ids))
    rng = np.random.default_rng(config.sample_seed)
    picked = rng.choice(len(frame_ids), size=n, replace=False)
    return [frame_ids[i] for i in sorted(picked)]


def parse_aspect(tag: str) -> Optional[Fraction]:
    if tag == "original":
        return None
    try:
        w, h = tag.split(":")
        ratio = Fraction(int(w), int(h))
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"unparseable aspect tag {tag!r}") from exc
    if ratio <= 0:
        raise DomainError(f"aspect ratio must be positive: {tag!r}")
    return ratio


def max_aspect_rect(width: int, height: int, ratio: Fraction) -> Rect:
    """Largest ratio-shaped rect inside width x height, anchored top-left."""
    if Fraction(width, height) >= ratio:
        h = height
        w = int(round(h * ratio))
    else:
        w = width
        h = int(round(w / ratio))
    return Rect(0, 0, max(1, min(w, width)), max(1, min(h, height)))


def _inscribe(ratio: Fraction, x1: int, y1: int, box_w: int, box_h: int) -> Optional[Rect]:
    """Largest ratio-shaped rect inscribed in an anchor box, centered."""
    if Fraction(box_w, box_h) >= ratio:
        h = box_h
        w = int(round(h * ratio))
    else:
        w = box_w
        h = int(round(w / ratio))
    w = min(w, box_w)
    h = min(h, box_h)
    if w < 1 or h < 1:
        return None
    return Rect(x1 + (box_w - w) // 2, y1 + (box_h - h) // 2, w, h)


def aspect_error_px(rect: Rect, ratio: Fraction) -> int:
    """Pixel distance from the target aspect (0 or 1 after rounding)."""
    return min(
        abs(rect.w - round(rect.h * float(ratio))),
        abs(rect.h - round(rect.w / float(ratio))),
    )


def generate_crop_candidates(
    width: int, height: int, aspect: str, config: CropConfig
) -> list[CropCandidate]:
    """Candidates of the target aspect from anchor-pair boxes on a G x G
    grid; each pair's box yields the largest inscribed target-aspect rect.
    Candidates under half the maximal same-aspect crop area are marked
    area-too-small. The original tag emits the single full-frame crop.
    """
    if min(width, height) < config.min_image_side:
        raise DomainError(
            f"image {width}x{height} below minimum side {config.min_image_side}"
        )
    if aspect == "original":
        return [CropCandidate(Rect(0, 0, width, height), aspect)]

    ratio = parse_aspect(aspect)
    g = config.grid_size
    xs = sorted({int(round(v)) for v in np.linspace(0, width, g)})
    ys = sorted({int(round(v)) for v in np.linspace(0, height, g)})

    seen: set[tuple[int, int, int, int]] = set()
    rects: list[Rect] = []
    for ai, x1 in enumerate(xs):
        for x2 in xs[ai + 1 :]:
            for bi, y1 in enumerate(ys):
                for y2 in ys[bi + 1 :]:
                    rect = _inscribe(ratio, x1, y1, x2 - x1, y2 - y1)
                    if rect is None:
                        continue
                    key = (rect.x, rect.y, rect.w, rect.h)
                    if key in seen:
                        continue
                    seen.add(key)
                    rects.append(rect)

    max_area = max_aspect_rect(width, height, ratio).area
    candidates = []
    for rect in sorted(rects, key=lambda r: (r.y, r.x, r.w, r.h)):
        reason = None
        if rect.area < config.min_area_fraction * max_area:
            reason = REJECT_AREA_TOO_SMALL
        candidates.append(CropCandidate(rect, aspect, rejected_reason=reason))
    return candidates


def filter_crops(
    candidates: list[CropCandidate],
    faces: list[Rect],
    config: CropConfig,
) -> list[CropCandidate]:
    """Apply the face-aware rejection rules in place and return the list.

    (a) a partially-overlapped face rejects the crop (bisects-face);
    (b) containing a face while excluding another at >= the configured
        area ratio rejects it (small-face-emphasis);
    (c) a vertical crop containing exactly one face whose center drifts
        out of the central horizontal band rejects it
        (off-center-single-face).
    A crop whose contained face sits in the tighter centering band gets
    the face_centered flag. Already-rejected candidates keep their reason.
    """
    half_band = config.center_band_fraction / 2.0
    half_center = config.face_centered_band_fraction / 2.0
    for cand in candidates:
        rect = cand.rect
        contained: list[Rect] = []
        partial = False
        for face in faces:
            overlap = rect.intersection_area(face)
            if overlap == 0:
                continue
            if overlap == face.area:
                contained.append(face)
            else:
                partial = True

        for face in contained:
            cx, _ = face.center()
            if abs(cx - (rect.x + rect.w / 2.0)) <= half_center * rect.w:
                cand.face_centered = True
                break

        if cand.rejected_reason is not None:
            continue
        if partial:
            cand.rejected_reason = REJECT_BISECTS_FACE
            continue
        if contained:
            excluded = [f for f in faces if rect.intersection_area(f) == 0]
            smallest_in = min(f.area for f in contained)
            if any(f.area >= config.small_face_area_ratio * smallest_in for f in excluded):
                cand.rejected_reason = REJECT_SMALL_FACE_EMPHASIS
                continue
        if cand.aspect == "2:3" and len(contained) == 1:
            cx, _ = contained[0].center()
            if abs(cx - (rect.x + rect.w / 2.0)) > half_band * rect.w:
                cand.rejected_reason = REJECT_OFF_CENTER_SINGLE_FACE
                continue
    return candidates


@dataclass
class RankedCrops:
    best: Optional[CropCandidate]
    face_centered_alternate: Optional[CropCandidate]
    ranked: list[CropCandidate]
    fallback_reason: Optional[str] = None


def rank_crops(
    candidates: list[CropCandidate],
    scorer: Callable[[CropCandidate], float],
) -> RankedCrops:
    """Order surviving candidates by scorer (ties: larger area, then
    top-left-most) and retain the best face-centered survivor separately.
    With no survivors, the least-rejected candidate stands in, its reason
    noted. A scorer failure drops the candidate with a warning.
    """
    survivors = [c for c in candidates if c.rejected_reason is None]
    fallback_reason = None
    if not survivors and candidates:
        mildest = min(_REJECT_SEVERITY[c.rejected_reason] for c in candidates)
        survivors = [
            c for c in candidates if _REJECT_SEVERITY[c.rejected_reason] == mildest
        ]
        fallback_reason = survivors[0].rejected_reason
    if not survivors:
        return RankedCrops(None, None, [], fallback_reason=None)

    scored = []
    for cand in survivors:
        try:
            cand.score = float(scorer(cand))
        except Exception as exc:  # scorer is pluggable; stay robust
            log.warning("crop scorer failed on %s: %s", cand.rect, exc)
            continue
        scored.append(cand)
    if not scored:
        return RankedCrops(None, None, [], fallback_reason=fallback_reason)

    scored.sort(key=lambda c: (-c.score, -c.rect.area, c.rect.y, c.rect.x))
    best = scored[0]
    face_centered = next((c for c in scored if c.face_centered), None)
    if face_centered is best:
        face_centered = None
    return RankedCrops(best, face_centered, scored, fallback_reason=fallback_reason)


class SaliencyGrid:
    """A frame's saliency resampled on demand to pixel rect queries."""

    def __init__(self, grid: np.ndarray, frame_w: int, frame_h: int):
        self.grid = np.asarray(grid, dtype=np.float64)
        self.frame_w = frame_w
        self.frame_h = frame_h
        self.total = float(self.grid.sum())
        self._cum = self.grid.cumsum(axis=0).cumsum(axis=1)

    def _to_grid(self, rect: Rect) -> tuple[int, int, int, int]:
        gh, gw = self.grid.shape
        return rect_to_grid(
            rect.x, rect.y, rect.x2, rect.y2, self.frame_w, self.frame_h, gw, gh
        )

    def rect_mass(self, rect: Rect) -> float:
        gx1, gy1, gx2, gy2 = self._to_grid(rect)
        c = self._cum
        total = c[gy2 - 1, gx2 - 1]
        left = c[gy2 - 1, gx1 - 1] if gx1 > 0 else 0.0
        above = c[gy1 - 1, gx2 - 1] if gy1 > 0 else 0.0
        corner = c[gy1 - 1, gx1 - 1] if gy1 > 0 and gx1 > 0 else 0.0
        return float(total - left - above + corner)

    def slice_rect(self, rect: Rect) -> np.ndarray:
        gx1, gy1, gx2, gy2 = self._to_grid(rect)
        return self.grid[gy1:gy2, gx1:gx2]


def make_saliency_scorer(
    saliency: SaliencyGrid, config: CropConfig
) -> Callable[[CropCandidate], float]:
    """Default crop scorer: saliency mass captured by the crop, minus a
    penalty for mass pressed against the crop's inner border, normalized
    by the frame's total mass. A learned scorer can replace this behind
    the same callable contract.
    """

    def scorer(cand: CropCandidate) -> float:
        if saliency.total <= 0:
            return 0.0
        rect = cand.rect
        inside = saliency.rect_mass(rect)
        border_w = max(1, int(round(config.border_width_fraction * min(rect.w, rect.h))))
        if rect.w > 2 * border_w and rect.h > 2 * border_w:
            inner = Rect(
                rect.x + border_w, rect.y + border_w,
                rect.w - 2 * border_w, rect.h - 2 * border_w,
            )
            border_mass = inside - saliency.rect_mass(inner)
        else:
            border_mass = inside
        return (inside - config.border_penalty * border_mass) / saliency.total

    return scorer
