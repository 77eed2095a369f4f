"""Shared domain types, geometry, and validation used across the engine.

All pixel coordinates are integer, top-left origin, y pointing down.
Rects are half-open: [x, x+w) x [y, y+h). All types are immutable value
data after construction and safe to share between workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

# Reserved label for points density clustering leaves unassigned.
NOISE = -1

EMOTIONS = (
    "neutral",
    "anger",
    "fear",
    "happiness",
    "sadness",
    "surprise",
    "disgust",
    "contempt",
)

SHOT_SCALES = ("long", "medium", "close-up")

KEYWORD_SOURCES = ("metadata", "remote-extraction", "user-added")

EMBEDDING_KINDS = ("frame", "crop", "face", "keyword", "prompt")

ASPECT_TAGS = ("original", "16:9", "2:3")


class DomainError(ValueError):
    """Raised when an operation's numeric preconditions are violated."""


@dataclass(frozen=True)
class EmbeddingVector:
    """A fixed-dimension real vector in a joint text-image space."""

    id: str
    kind: str
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.size == 0:
            raise DomainError(f"embedding {self.id!r}: expected non-empty 1-D vector")
        if not np.all(np.isfinite(vals)):
            raise DomainError(f"embedding {self.id!r}: non-finite component")
        if self.kind not in EMBEDDING_KINDS:
            raise DomainError(f"embedding {self.id!r}: unknown kind {self.kind!r}")
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return int(self.values.size)


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two equal-dimension vectors.

    Accepts EmbeddingVector or array-like. Zero-norm inputs are a domain
    error, never silently mapped to 0.
    """
    va = a.values if isinstance(a, EmbeddingVector) else np.asarray(a, dtype=np.float64)
    vb = b.values if isinstance(b, EmbeddingVector) else np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise DomainError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise DomainError("cosine similarity undefined for zero-norm vector")
    value = float(np.dot(va, vb) / (na * nb))
    # Guard float drift so callers can rely on the [-1, 1] contract.
    return max(-1.0, min(1.0, value))


@dataclass(frozen=True)
class Rect:
    """Half-open pixel rectangle [x, x+w) x [y, y+h); w, h > 0."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise DomainError(f"rect needs positive size, got {self.w}x{self.h}")

    @property
    def x2(self) -> int:
        return self.x + self.w

    @property
    def y2(self) -> int:
        return self.y + self.h

    @property
    def area(self) -> int:
        return self.w * self.h

    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def intersection_area(self, other: "Rect") -> int:
        iw = min(self.x2, other.x2) - max(self.x, other.x)
        ih = min(self.y2, other.y2) - max(self.y, other.y)
        if iw <= 0 or ih <= 0:
            return 0
        return iw * ih

    def contains_rect(self, other: "Rect") -> bool:
        return (
            self.x <= other.x
            and self.y <= other.y
            and self.x2 >= other.x2
            and self.y2 >= other.y2
        )

    def contains_point(self, px: float, py: float) -> bool:
        return self.x <= px < self.x2 and self.y <= py < self.y2

    def clamped(self, width: int, height: int) -> "Rect":
        """Intersect with the host image [0, width) x [0, height)."""
        x1 = max(0, self.x)
        y1 = max(0, self.y)
        x2 = min(width, self.x2)
        y2 = min(height, self.y2)
        if x2 <= x1 or y2 <= y1:
            raise DomainError("rect entirely outside host image")
        return Rect(x1, y1, x2 - x1, y2 - y1)

    def translated(self, dx: int, dy: int) -> "Rect":
        return Rect(self.x + dx, self.y + dy, self.w, self.h)


@dataclass(frozen=True)
class FrameMetrics:
    """Per-frame quality metrics on the letterbox-free image."""

    luminance: float
    sharpness: float
    uniformity: float
    stillness: float

    def __post_init__(self):
        for name in ("luminance", "sharpness", "uniformity", "stillness"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"metric {name} not finite: {v}")
        if not 0.0 <= self.uniformity <= 1.0:
            raise DomainError(f"uniformity outside [0,1]: {self.uniformity}")
        if self.sharpness < 0 or self.stillness < 0:
            raise DomainError("sharpness and stillness must be >= 0")


@dataclass
class FrameRecord:
    """One decoded frame plus its pipeline state."""

    frame_id: int
    timestamp_s: float
    width: int
    height: int
    letterbox_top: int = 0
    letterbox_bottom: int = 0
    shot_id: int = -1
    subshot_id: int = -1
    group_id: int = -1
    is_keyframe: bool = False
    is_transition: bool = False
    metrics: Optional[FrameMetrics] = None

    def __post_init__(self):
        if not 0 <= self.letterbox_top + self.letterbox_bottom < self.height:
            raise DomainError(
                f"frame {self.frame_id}: letterbox rows "
                f"{self.letterbox_top}+{self.letterbox_bottom} "
                f"must stay below height {self.height}"
            )

    @property
    def content_height(self) -> int:
        return self.height - self.letterbox_top - self.letterbox_bottom


@dataclass(frozen=True)
class EyeLandmarks:
    """Eye contour points for one face, either six- or nine-point per eye.

    Point convention per eye (fixed, documented in the landmark file
    format): six-point is p1..p6 with p1/p4 the horizontal extremes and
    (p2,p6), (p3,p5) the vertical pairs; nine-point is contour p1..p8
    clockwise from the left corner (p1/p5 the horizontal extremes,
    vertical pairs (p2,p8), (p3,p7), (p4,p6)) followed by the pupil.
    """

    scheme: str  # "six-point" | "nine-point"
    left_eye: Optional[np.ndarray] = None  # (6,2) or (9,2) float
    right_eye: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.scheme not in ("six-point", "nine-point"):
            raise DomainError(f"unknown landmark scheme {self.scheme!r}")
        n = 6 if self.scheme == "six-point" else 9
        for side, pts in (("left", self.left_eye), ("right", self.right_eye)):
            if pts is None:
                continue
            arr = np.asarray(pts, dtype=np.float64)
            if arr.shape != (n, 2):
                raise DomainError(
                    f"{side} eye: expected {n} points for {self.scheme}, got {arr.shape}"
                )
            object.__setattr__(self, f"{side}_eye", arr)


@dataclass
class FaceRecord:
    """One detected face in post-letterbox frame coordinates."""

    face_id: str
    frame_id: int
    bbox: Rect
    expanded_bbox: Rect
    landmarks: Optional[EyeLandmarks] = None
    area_fraction: float = 0.0
    ear_left: Optional[float] = None
    ear_right: Optional[float] = None
    eyes_closed: bool = False
    emotion: str = "neutral"
    cluster_id: int = NOISE
    embedding: Optional[EmbeddingVector] = None

    def __post_init__(self):
        if not self.expanded_bbox.contains_rect(self.bbox):
            raise DomainError(f"face {self.face_id}: expanded bbox must contain bbox")
        if self.emotion not in EMOTIONS:
            raise DomainError(f"face {self.face_id}: unknown emotion {self.emotion!r}")
        if not 0.0 < self.area_fraction <= 1.0:
            raise DomainError(
                f"face {self.face_id}: area fraction {self.area_fraction} outside (0,1]"
            )


@dataclass(frozen=True)
class SaliencyMap:
    """Per-frame viewer-attention prediction, cells >= 0."""

    frame_id: int
    grid: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        if grid.ndim != 2 or grid.size == 0:
            raise DomainError("saliency grid must be a non-empty 2-D matrix")
        if np.any(grid < 0) or not np.all(np.isfinite(grid)):
            raise DomainError("saliency cells must be finite and >= 0")
        if self.normalized and abs(float(grid.sum()) - 1.0) > 1e-6:
            raise DomainError("normalized saliency must sum to 1 +- 1e-6")
        object.__setattr__(self, "grid", grid)


@dataclass(frozen=True)
class LogoPriorMap:
    """Probability a pixel has historically carried logo artwork."""

    grid: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=np.float64)
        if grid.ndim != 2 or grid.size == 0:
            raise DomainError("logo prior must be a non-empty 2-D matrix")
        if np.any(grid < 0) or np.any(grid > 1) or not np.all(np.isfinite(grid)):
            raise DomainError("logo prior cells must be in [0,1]")
        if float(grid.sum()) <= 0:
            raise DomainError("logo prior must carry positive total mass")
        object.__setattr__(self, "grid", grid)


@dataclass(frozen=True)
class Keyword:
    text: str
    embedding: EmbeddingVector
    source: str = "metadata"

    def __post_init__(self):
        if not self.text.strip():
            raise DomainError("keyword text must be non-blank")
        if self.source not in KEYWORD_SOURCES:
            raise DomainError(f"unknown keyword source {self.source!r}")


@dataclass
class VideoManifest:
    video_id: str
    fps: float
    frame_count: int
    duration_s: float
    title: str = ""
    summary: str = ""
    keywords: list[Keyword] = field(default_factory=list)
    embedding_dim: int = 512

    def __post_init__(self):
        if self.fps <= 0:
            raise DomainError(f"fps must be > 0, got {self.fps}")
        if self.frame_count < 1:
            raise DomainError(f"frame_count must be >= 1, got {self.frame_count}")
        if self.embedding_dim <= 0:
            raise DomainError(f"embedding_dim must be > 0, got {self.embedding_dim}")


@dataclass(frozen=True)
class ValidationEntry:
    category: str  # e.g. "dangling-reference", "dimension-mismatch", "missing-artifact"
    item: str
    message: str


@dataclass
class ValidationReport:
    entries: list[ValidationEntry] = field(default_factory=list)
    warnings: list[ValidationEntry] = field(default_factory=list)

    @property
    def usable(self) -> bool:
        return not self.entries

    def add(self, category: str, item: str, message: str):
        self.entries.append(ValidationEntry(category, item, message))

    def warn(self, category: str, item: str, message: str):
        self.warnings.append(ValidationEntry(category, item, message))


def validate_dataset(manifest, frames, artifacts) -> ValidationReport:
    """Cross-check a loaded dataset bundle for dangling references.

    ``artifacts`` is the bundle's artifact index (see ingest.ArtifactIndex):
    embeddings keyed by id, face/landmark/emotion records, saliency frame
    ids, optional logo prior. The dataset is usable iff the report lists
    no errors; missing optional artifacts are warnings.
    """
    report = ValidationReport()
    frame_ids = {f.frame_id for f in frames}
    dim = manifest.embedding_dim

    if manifest.frame_count != len(frames):
        report.add(
            "frame-count",
            manifest.video_id,
            f"manifest declares {manifest.frame_count} frames, bundle has {len(frames)}",
        )

    for kw in manifest.keywords:
        if kw.embedding.dim != dim:
            report.add(
                "dimension-mismatch",
                f"keyword:{kw.text}",
                f"keyword embedding dim {kw.embedding.dim} != manifest dim {dim}",
            )

    if not manifest.keywords:
        report.warn("missing-artifact", "keywords", "manifest carries no keywords yet")

    for fid, emb in artifacts.frame_embeddings.items():
        if fid not in frame_ids:
            report.add(
                "dangling-reference",
                f"frame-embedding:{fid}",
                f"embedding references unknown frame {fid}",
            )
        if emb.dim != dim:
            report.add(
                "dimension-mismatch",
                f"frame-embedding:{fid}",
                f"dim {emb.dim} != manifest dim {dim}",
            )
    for fid in frame_ids:
        if fid not in artifacts.frame_embeddings:
            report.add(
                "missing-artifact",
                f"frame:{fid}",
                f"frame {fid} has no embedding",
            )

    known_faces = set()
    for face in artifacts.faces:
        known_faces.add(face.face_id)
        if face.frame_id not in frame_ids:
            report.add(
                "dangling-reference",
                f"face:{face.face_id}",
                f"face references unknown frame {face.frame_id}",
            )

    for face_id, emb in artifacts.face_embeddings.items():
        if face_id not in known_faces:
            report.add(
                "dangling-reference",
                f"face-embedding:{face_id}",
                f"embedding references unknown face {face_id}",
            )

    for face_id in artifacts.landmarks:
        if face_id not in known_faces:
            report.add(
                "dangling-reference",
                f"landmarks:{face_id}",
                f"landmarks reference unknown face {face_id}",
            )
    for face_id in artifacts.emotions:
        if face_id not in known_faces:
            report.add(
                "dangling-reference",
                f"emotion:{face_id}",
                f"emotion record references unknown face {face_id}",
            )
    for fid in artifacts.shot_scales:
        if fid not in frame_ids:
            report.add(
                "dangling-reference",
                f"shot-scale:{fid}",
                f"shot-scale label references unknown frame {fid}",
            )

    for pid in ("good", "bad"):
        emb = artifacts.prompt_embeddings.get(pid)
        if emb is None:
            report.add("missing-artifact", f"prompt:{pid}", f"prompt embedding {pid!r} missing")
        elif emb.dim != dim:
            report.add(
                "dimension-mismatch",
                f"prompt:{pid}",
                f"dim {emb.dim} != manifest dim {dim}",
            )

    for fid in artifacts.saliency_frames:
        if fid not in frame_ids:
            report.add(
                "dangling-reference",
                f"saliency:{fid}",
                f"saliency map references unknown frame {fid}",
            )
    missing_saliency = frame_ids - set(artifacts.saliency_frames)
    if missing_saliency:
        report.warn(
            "missing-artifact",
            "saliency",
            f"{len(missing_saliency)} frames lack saliency maps "
            "(scoring will fail if any is a keyframe)",
        )

    if artifacts.logo_prior is None:
        report.warn("missing-artifact", "logo-prior", "no logo prior map in bundle")

    return report
