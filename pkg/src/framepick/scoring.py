"""Per-candidate scores: prompt-pair aesthetic, keyword semantic
consistency, logo placeability, on-face focus, face position; plus
min-max normalization and the weighted final aggregate.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import cv2
import numpy as np

from .config import ConfigError, ScoringConfig
from .images import rect_to_grid
from .model import DomainError, Rect, cosine_similarity

log = logging.getLogger(__name__)

SCORE_COLUMNS = ("aesthetic", "semantic", "logo", "face_position", "on_face_focus")

# Center-column weights per vertical sixth of the frame, top to bottom;
# everything outside the central horizontal band scores the side weight.
FACE_POSITION_ROWS = (0.5, 0.75, 1.0, 0.75, 0.5, 0.25)
FACE_POSITION_SIDE = 0.1


@dataclass
class WeightConfig:
    w_aesthetic: float = 1.0
    w_semantic: float = 1.0
    w_logo: float = 1.0
    w_face_position: float = 1.0
    w_on_face_focus: float = 1.0
    face_aggregation: str = "max"  # max | mean
    keywords: list[str] = field(default_factory=list)  # empty = all

    def __post_init__(self):
        weights = (
            self.w_aesthetic,
            self.w_semantic,
            self.w_logo,
            self.w_face_position,
            self.w_on_face_focus,
        )
        if any(w < 0 for w in weights):
            raise ConfigError("weights must be >= 0")
        if not any(w > 0 for w in weights):
            raise ConfigError("at least one weight must be > 0")
        if self.face_aggregation not in ("max", "mean"):
            raise ConfigError(f"unknown face aggregation {self.face_aggregation!r}")

    def by_column(self) -> dict[str, float]:
        return {
            "aesthetic": self.w_aesthetic,
            "semantic": self.w_semantic,
            "logo": self.w_logo,
            "face_position": self.w_face_position,
            "on_face_focus": self.w_on_face_focus,
        }

    @classmethod
    def from_scoring_config(cls, sc: ScoringConfig) -> "WeightConfig":
        return cls(
            w_aesthetic=sc.w_aesthetic,
            w_semantic=sc.w_semantic,
            w_logo=sc.w_logo,
            w_face_position=sc.w_face_position,
            w_on_face_focus=sc.w_on_face_focus,
            face_aggregation=sc.face_aggregation,
        )


@dataclass
class ScoreVector:
    """Raw per-candidate measurements; face scores are None when the
    candidate contains no faces (not-applicable, excluded from finals).
    """

    aesthetic: float = 0.0
    semantic: dict[str, float] = field(default_factory=dict)  # keyword -> raw cosine
    logo: float = 0.0
    face_position: Optional[float] = None
    on_face_focus: Optional[float] = None
    final: float = 0.0


def aesthetic_score(
    image_embedding, good_embedding, bad_embedding, temperature: float = 1.0
) -> float:
    """Two-way softmax over the cosine similarities to a good/bad prompt
    pair; sits strictly inside (0, 1).
    """
    s_good = cosine_similarity(image_embedding, good_embedding)
    s_bad = cosine_similarity(image_embedding, bad_embedding)
    eg = math.exp(temperature * s_good)
    eb = math.exp(temperature * s_bad)
    return eg / (eg + eb)


def semantic_scores(candidate_matrix: np.ndarray, keyword_matrix: np.ndarray) -> np.ndarray:
    """Raw cosine per (candidate, keyword); crops are scored on their own
    embeddings, independently of their parent frames.
    """
    cand = np.asarray(candidate_matrix, dtype=np.float64)
    kw = np.asarray(keyword_matrix, dtype=np.float64)
    if cand.shape[1] != kw.shape[1]:
        raise DomainError(
            f"embedding dims differ: candidates {cand.shape[1]} vs keywords {kw.shape[1]}"
        )
    cn = np.linalg.norm(cand, axis=1)
    kn = np.linalg.norm(kw, axis=1)
    if np.any(cn == 0) or np.any(kn == 0):
        raise DomainError("semantic scores undefined for zero-norm embeddings")
    return (cand / cn[:, None]) @ (kw / kn[:, None]).T


def aggregate_semantic(per_keyword: dict[str, float], selected: list[str]) -> float:
    """Mean raw cosine over the selected keyword set."""
    if not selected:
        raise ConfigError("semantic aggregation needs a non-empty keyword set")
    missing = [k for k in selected if k not in per_keyword]
    if missing:
        raise DomainError(f"no semantic column for keywords: {missing}")
    return float(sum(per_keyword[k] for k in selected) / len(selected))


def _resample_nearest(grid: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    if grid.shape == (out_h, out_w):
        return grid
    return cv2.resize(grid, (out_w, out_h), interpolation=cv2.INTER_NEAREST)


def logo_score(
    prior: np.ndarray,
    saliency: np.ndarray,
    faces: list[Rect],
    out_w: int,
    out_h: int,
) -> float:
    """Fraction of the logo-placement prior that survives after removing
    salient regions and zeroing face boxes.

    Prior and saliency are nearest-neighbor resampled to the candidate's
    pixel grid; saliency is peak-normalized so both maps share the [0, 1]
    scale before subtraction.
    """
    prior_r = _resample_nearest(prior, out_w, out_h)
    prior_mass = float(prior_r.sum())
    if prior_mass <= 0:
        raise ConfigError("logo prior has zero mass on the candidate grid")
    sal_r = _resample_nearest(saliency, out_w, out_h)
    peak = float(sal_r.max())
    if peak > 0:
        sal_r = sal_r / peak
    adjusted = np.clip(prior_r - sal_r, 0.0, None)
    for face in faces:
        gx1, gy1, gx2, gy2 = rect_to_grid(
            face.x, face.y, face.x2, face.y2, out_w, out_h, out_w, out_h
        )
        adjusted[gy1:gy2, gx1:gx2] = 0.0
    return float(adjusted.sum() / prior_mass)


def on_face_focus(
    saliency: np.ndarray,
    faces: list[Rect],
    frame_w: int,
    frame_h: int,
) -> Optional[float]:
    """Share of attention mass inside the union of face boxes; None when
    the candidate has no faces (or carries no attention mass at all).
    """
    if not faces:
        return None
    grid = np.asarray(saliency, dtype=np.float64)
    total = float(grid.sum())
    if total <= 0:
        log.warning("on-face focus: saliency map carries zero mass")
        return None
    gh, gw = grid.shape
    mask = np.zeros_like(grid, dtype=bool)
    for face in faces:
        gx1, gy1, gx2, gy2 = rect_to_grid(
            face.x, face.y, face.x2, face.y2, frame_w, frame_h, gw, gh
        )
        mask[gy1:gy2, gx1:gx2] = True
    return float(grid[mask].sum() / total)


def face_position_score(
    center_x: float,
    center_y: float,
    width: int,
    height: int,
    row_weights: tuple[float, ...] = FACE_POSITION_ROWS,
    side_weight: float = FACE_POSITION_SIDE,
) -> float:
    """Positional weight of a face center: six vertical bands inside the
    central horizontal fifth-to-four-fifths column, a flat side weight
    outside it. Bands are half-open at the top, so y = height/2 still
    lands in the prime central cell.
    """
    if center_y <= 0:
        row = 0
    else:
        row = min(len(row_weights) - 1, math.ceil(len(row_weights) * center_y / height) - 1)
    in_band = width / 5.0 <= center_x <= 4.0 * width / 5.0
    return row_weights[row] if in_band else side_weight


def aggregate_faces(per_face_scores: list[float], mode: str = "max") -> float:
    if not per_face_scores:
        raise DomainError("aggregate_faces needs at least one face score")
    if mode == "max":
        return max(per_face_scores)
    if mode == "mean":
        return float(sum(per_face_scores) / len(per_face_scores))
    raise ConfigError(f"unknown face aggregation {mode!r}")


def normalize_column(values: list[Optional[float]]) -> list[Optional[float]]:
    """Min-max scale the applicable entries to [0, 1]; None entries pass
    through. A degenerate column (all equal, or a single value) maps to
    0.5 everywhere.
    """
    present = [v for v in values if v is not None]
    if not present:
        return list(values)
    lo, hi = min(present), max(present)
    if hi == lo:
        return [0.5 if v is not None else None for v in values]
    span = hi - lo
    return [(v - lo) / span if v is not None else None for v in values]


def final_score(normalized: dict[str, Optional[float]], weights: WeightConfig) -> float:
    """Weighted mean over the applicable normalized scores; weights of
    not-applicable columns drop out of both numerator and denominator.
    """
    by_col = weights.by_column()
    num = 0.0
    den = 0.0
    for col in SCORE_COLUMNS:
        value = normalized.get(col)
        if value is None:
            continue
        w = by_col[col]
        num += w * value
        den += w
    if den == 0:
        raise ConfigError("all applicable score weights are zero")
    return num / den
