"""Dataset bundle: the on-disk layout the engine ingests.

    <root>/
      manifest.json                 video metadata + keyword strings
      frames/index.json             [{frame_id, timestamp_s, file, width, height}]
      frames/frame_*.png            decoded stills (PNG or binary PPM)
      artifacts/frame_embeddings.fpk    FPK1, row ids = frame ids
      artifacts/keyword_embeddings.fpk  FPK1, row ids = keyword text
      artifacts/prompt_embeddings.fpk   FPK1, row ids = "good", "bad"
      artifacts/face_embeddings.fpk     FPK1, row ids = face ids (optional)
      artifacts/crop_embeddings.fpk     FPK1, row ids = candidate ids (optional)
      artifacts/faces.txt           face_id,frame_id,x,y,w,h  (full-frame coords)
      artifacts/landmarks.txt       face_id,frame_id,scheme,x1,y1,...  (left eye
                                    then right eye; an all-zero eye block means
                                    that eye was not detected)
      artifacts/emotions.txt        face_id,emotion
      artifacts/shot_scales.txt     frame_id,label  (long|medium|close-up)
      artifacts/saliency/frame_*.pgm    8-bit PGM, grid maps onto the
                                        post-letterbox frame
      artifacts/logo_prior.pgm      8-bit PGM in a reference resolution
      cache/                        stage cache (the only directory the
                                    pipeline writes into)
      selections/                   review-service selection logs

Record files are line-delimited text; blank lines and lines starting
with '#' are ignored.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .images import load_rgb, read_pgm
from .model import (
    EMOTIONS,
    SHOT_SCALES,
    EmbeddingVector,
    EyeLandmarks,
    FrameRecord,
    Keyword,
    LogoPriorMap,
    Rect,
    SaliencyMap,
    ValidationReport,
    VideoManifest,
    validate_dataset,
)
from .tensorio import read_tensor_file


class IngestError(ValueError):
    pass


@dataclass(frozen=True)
class RawFace:
    """A face detection as ingested: bbox in full-frame coordinates."""

    face_id: str
    frame_id: int
    bbox: Rect


@dataclass
class ArtifactIndex:
    frame_embeddings: dict[int, EmbeddingVector] = field(default_factory=dict)
    keyword_embeddings: dict[str, EmbeddingVector] = field(default_factory=dict)
    prompt_embeddings: dict[str, EmbeddingVector] = field(default_factory=dict)
    face_embeddings: dict[str, EmbeddingVector] = field(default_factory=dict)
    crop_embeddings: dict[str, EmbeddingVector] = field(default_factory=dict)
    faces: list[RawFace] = field(default_factory=list)
    landmarks: dict[str, EyeLandmarks] = field(default_factory=dict)
    emotions: dict[str, str] = field(default_factory=dict)
    shot_scales: dict[int, str] = field(default_factory=dict)
    saliency_frames: list[int] = field(default_factory=list)
    logo_prior: Optional[LogoPriorMap] = None


@dataclass
class DatasetBundle:
    root: Path
    manifest: VideoManifest
    frames: list[FrameRecord]
    artifacts: ArtifactIndex
    frame_files: dict[int, Path]
    saliency_files: dict[int, Path]

    @property
    def cache_dir(self) -> Path:
        return self.root / "cache"

    @property
    def selections_dir(self) -> Path:
        return self.root / "selections"

    @property
    def dataset_path(self) -> Path:
        return self.root / "dataset.json"

    def load_frame_image(self, frame_id: int) -> np.ndarray:
        try:
            path = self.frame_files[frame_id]
        except KeyError:
            raise IngestError(f"no frame image for id {frame_id}") from None
        return load_rgb(path)

    def load_saliency(self, frame_id: int) -> Optional[SaliencyMap]:
        path = self.saliency_files.get(frame_id)
        if path is None:
            return None
        return SaliencyMap(frame_id=frame_id, grid=read_pgm(path))

    def validate(self) -> ValidationReport:
        return validate_dataset(self.manifest, self.frames, self.artifacts)


def _iter_records(path: Path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line.split(",")


def load_manifest(path) -> VideoManifest:
    """Parse manifest.json; keyword embeddings come from the sidecar
    artifacts/keyword_embeddings.fpk next to it (keywords may legitimately
    be empty before extraction has run).
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestError(f"unreadable manifest: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IngestError(
            f"malformed manifest {path.name} at line {exc.lineno}: {exc.msg}"
        ) from exc

    for key in ("video_id", "fps", "frame_count", "duration_s"):
        if key not in data:
            raise IngestError(f"manifest missing required field {key!r}")
    fps = float(data["fps"])
    if fps <= 0:
        raise IngestError(f"manifest fps must be > 0, got {fps}")

    keyword_texts = list(data.get("keywords", []))
    embedding_dim = int(data.get("embedding_dim", 512))

    keywords: list[Keyword] = []
    if keyword_texts:
        sidecar = path.parent / "artifacts" / "keyword_embeddings.fpk"
        if not sidecar.exists():
            raise IngestError(
                f"manifest lists {len(keyword_texts)} keywords but "
                f"{sidecar} is missing"
            )
        ids, matrix = read_tensor_file(sidecar)
        table = {rid: matrix[i] for i, rid in enumerate(ids)}
        missing = [t for t in keyword_texts if t not in table]
        if missing:
            raise IngestError(f"keyword embeddings missing for: {missing}")
        for text_ in keyword_texts:
            keywords.append(
                Keyword(
                    text=text_,
                    embedding=EmbeddingVector(
                        id=text_, kind="keyword", values=table[text_]
                    ),
                    source="metadata",
                )
            )

    return VideoManifest(
        video_id=str(data["video_id"]),
        fps=fps,
        frame_count=int(data["frame_count"]),
        duration_s=float(data["duration_s"]),
        title=str(data.get("title", "")),
        summary=str(data.get("summary", "")),
        keywords=keywords,
        embedding_dim=embedding_dim,
    )


def _load_embedding_file(path: Path, kind: str) -> dict[str, EmbeddingVector]:
    ids, matrix = read_tensor_file(path)
    return {
        rid: EmbeddingVector(id=rid, kind=kind, values=matrix[i])
        for i, rid in enumerate(ids)
    }


def _parse_faces(path: Path) -> list[RawFace]:
    faces = []
    for lineno, fields in _iter_records(path):
        if len(fields) != 6:
            raise IngestError(f"{path.name}:{lineno}: expected 6 fields, got {len(fields)}")
        face_id, frame_id, x, y, w, h = fields
        faces.append(
            RawFace(
                face_id=face_id,
                frame_id=int(frame_id),
                bbox=Rect(int(x), int(y), int(w), int(h)),
            )
        )
    return faces


def _parse_eye_block(coords: list[float]) -> Optional[np.ndarray]:
    pts = np.array(coords, dtype=np.float64).reshape(-1, 2)
    if np.all(pts == 0):
        return None  # all-zero block encodes "eye not detected"
    return pts


def _parse_landmarks(path: Path) -> dict[str, EyeLandmarks]:
    out: dict[str, EyeLandmarks] = {}
    for lineno, fields in _iter_records(path):
        if len(fields) < 4:
            raise IngestError(f"{path.name}:{lineno}: too few fields")
        face_id, _frame_id, scheme = fields[0], fields[1], fields[2]
        if scheme not in ("six-point", "nine-point"):
            raise IngestError(f"{path.name}:{lineno}: unknown scheme {scheme!r}")
        per_eye = 6 if scheme == "six-point" else 9
        coords = [float(v) for v in fields[3:]]
        if len(coords) != per_eye * 4:
            raise IngestError(
                f"{path.name}:{lineno}: expected {per_eye * 4} coordinates "
                f"(both eyes), got {len(coords)}"
            )
        left = _parse_eye_block(coords[: per_eye * 2])
        right = _parse_eye_block(coords[per_eye * 2 :])
        out[face_id] = EyeLandmarks(scheme=scheme, left_eye=left, right_eye=right)
    return out


def _parse_emotions(path: Path) -> dict[str, str]:
    out = {}
    for lineno, fields in _iter_records(path):
        if len(fields) != 2:
            raise IngestError(f"{path.name}:{lineno}: expected 2 fields")
        face_id, emotion = fields
        if emotion not in EMOTIONS:
            raise IngestError(f"{path.name}:{lineno}: unknown emotion {emotion!r}")
        out[face_id] = emotion
    return out


def _parse_shot_scales(path: Path) -> dict[int, str]:
    out = {}
    for lineno, fields in _iter_records(path):
        if len(fields) != 2:
            raise IngestError(f"{path.name}:{lineno}: expected 2 fields")
        frame_id, label = fields
        if label not in SHOT_SCALES:
            raise IngestError(f"{path.name}:{lineno}: unknown shot scale {label!r}")
        out[int(frame_id)] = label
    return out


def load_bundle(root) -> DatasetBundle:
    """Load manifest, frame index, and every artifact file under ``root``.

    Frame pixel data and saliency grids stay on disk; only their paths are
    indexed here. Raises IngestError on unreadable or malformed files.
    """
    root = Path(root)
    manifest = load_manifest(root / "manifest.json")

    index_path = root / "frames" / "index.json"
    try:
        index = json.loads(index_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IngestError(f"unreadable frame index: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IngestError(f"malformed frame index at line {exc.lineno}: {exc.msg}") from exc

    frames = []
    frame_files = {}
    for row in sorted(index, key=lambda r: r["frame_id"]):
        fid = int(row["frame_id"])
        frames.append(
            FrameRecord(
                frame_id=fid,
                timestamp_s=float(row["timestamp_s"]),
                width=int(row["width"]),
                height=int(row["height"]),
            )
        )
        frame_files[fid] = root / "frames" / row["file"]

    art_dir = root / "artifacts"
    art = ArtifactIndex()

    def optional(name: str) -> Optional[Path]:
        p = art_dir / name
        return p if p.exists() else None

    p = optional("frame_embeddings.fpk")
    if p:
        art.frame_embeddings = {
            int(k): v for k, v in _load_embedding_file(p, "frame").items()
        }
    p = optional("keyword_embeddings.fpk")
    if p:
        art.keyword_embeddings = _load_embedding_file(p, "keyword")
    p = optional("prompt_embeddings.fpk")
    if p:
        art.prompt_embeddings = _load_embedding_file(p, "prompt")
    p = optional("face_embeddings.fpk")
    if p:
        art.face_embeddings = _load_embedding_file(p, "face")
    p = optional("crop_embeddings.fpk")
    if p:
        art.crop_embeddings = _load_embedding_file(p, "crop")

    p = optional("faces.txt")
    if p:
        art.faces = _parse_faces(p)
    p = optional("landmarks.txt")
    if p:
        art.landmarks = _parse_landmarks(p)
    p = optional("emotions.txt")
    if p:
        art.emotions = _parse_emotions(p)
    p = optional("shot_scales.txt")
    if p:
        art.shot_scales = _parse_shot_scales(p)

    saliency_files = {}
    saliency_dir = art_dir / "saliency"
    if saliency_dir.is_dir():
        for path in sorted(saliency_dir.glob("frame_*.pgm")):
            fid = int(path.stem.split("_")[1])
            saliency_files[fid] = path
    art.saliency_frames = sorted(saliency_files)

    p = optional("logo_prior.pgm")
    if p:
        art.logo_prior = LogoPriorMap(grid=read_pgm(p))

    return DatasetBundle(
        root=root,
        manifest=manifest,
        frames=frames,
        artifacts=art,
        frame_files=frame_files,
        saliency_files=saliency_files,
    )
