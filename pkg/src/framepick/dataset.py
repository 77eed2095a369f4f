"""The scored per-video dataset: what the pipeline emits, the selection
presets consume, and the review service loads into memory.

Serialization is canonical JSON (sorted keys, fixed separators) so that
identical runs produce byte-identical dataset files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .scoring import ScoreVector


def candidate_id_for(frame_id: int, aspect: str, face_centered: bool = False) -> str:
    tag = aspect.replace(":", "x") if aspect != "original" else "orig"
    suffix = "-fc" if face_centered else ""
    return f"f{frame_id:06d}-{tag}{suffix}"


@dataclass
class FrameRow:
    frame_id: int
    timestamp_s: float
    width: int
    height: int
    shot_id: int = -1
    subshot_id: int = -1
    group_id: int = -1
    is_keyframe: bool = False
    is_transition: bool = False
    shot_scale: Optional[str] = None
    metrics: dict = field(default_factory=dict)


@dataclass
class FaceRow:
    face_id: str
    frame_id: int
    bbox: tuple[int, int, int, int]          # post-letterbox coords
    expanded_bbox: tuple[int, int, int, int]
    area_fraction: float
    ear_left: Optional[float]
    ear_right: Optional[float]
    eyes_closed: bool
    eyes_known: bool
    emotion: str
    cluster_id: int
    center: tuple[float, float]
    center_fallback: bool


@dataclass
class GroupRow:
    group_id: int
    members: list[int]
    representatives: dict[str, str] = field(default_factory=dict)


@dataclass
class ClusterRow:
    cluster_id: int
    members: list[str]
    size: int
    rank: int


@dataclass
class CandidateRow:
    candidate_id: str
    frame_id: int
    group_id: int
    aspect: str
    rect: tuple[int, int, int, int]  # post-letterbox coords
    face_ids: list[str]
    face_centered: bool
    scores: ScoreVector
    normalized: dict[str, Optional[float]] = field(default_factory=dict)

    @property
    def final(self) -> float:
        return self.scores.final


@dataclass
class VideoDataset:
    video: dict
    letterbox: tuple[int, int]
    frames: list[FrameRow]
    shots: list[dict]
    groups: list[GroupRow]
    faces: list[FaceRow]
    face_clusters: list[ClusterRow]
    chosen_k: int
    cluster_score_curve: list[tuple[int, float]]
    manual_cluster_parameters_needed: bool
    candidates: list[CandidateRow]
    proposals: dict = field(default_factory=dict)

    def __post_init__(self):
        self._reindex()

    def _reindex(self):
        self.frames_by_id = {f.frame_id: f for f in self.frames}
        self.faces_by_id = {f.face_id: f for f in self.faces}
        self.groups_by_id = {g.group_id: g for g in self.groups}
        self.candidates_by_id = {c.candidate_id: c for c in self.candidates}
        self.candidates_by_aspect: dict[str, list[CandidateRow]] = {}
        for cand in self.candidates:
            self.candidates_by_aspect.setdefault(cand.aspect, []).append(cand)

    @property
    def video_id(self) -> str:
        return self.video["video_id"]

    @property
    def keyword_texts(self) -> list[str]:
        return [k["text"] for k in self.video.get("keywords", [])]

    def aspects(self) -> list[str]:
        return sorted(self.candidates_by_aspect)

    def contained_faces(self, cand: CandidateRow) -> list[FaceRow]:
        return [self.faces_by_id[fid] for fid in cand.face_ids]

    # -- serialization -------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "video": self.video,
            "letterbox": list(self.letterbox),
            "frames": [vars(f).copy() for f in self.frames],
            "shots": self.shots,
            "groups": [
                {
                    "group_id": g.group_id,
                    "members": g.members,
                    "representatives": g.representatives,
                }
                for g in self.groups
            ],
            "faces": [
                {**vars(f), "bbox": list(f.bbox),
                 "expanded_bbox": list(f.expanded_bbox), "center": list(f.center)}
                for f in self.faces
            ],
            "face_clusters": [vars(c).copy() for c in self.face_clusters],
            "chosen_k": self.chosen_k,
            "cluster_score_curve": [[k, s] for k, s in self.cluster_score_curve],
            "manual_cluster_parameters_needed": self.manual_cluster_parameters_needed,
            "candidates": [
                {
                    "candidate_id": c.candidate_id,
                    "frame_id": c.frame_id,
                    "group_id": c.group_id,
                    "aspect": c.aspect,
                    "rect": list(c.rect),
                    "face_ids": c.face_ids,
                    "face_centered": c.face_centered,
                    "raw": {
                        "aesthetic": c.scores.aesthetic,
                        "semantic": c.scores.semantic,
                        "logo": c.scores.logo,
                        "face_position": c.scores.face_position,
                        "on_face_focus": c.scores.on_face_focus,
                    },
                    "normalized": c.normalized,
                    "final": c.scores.final,
                }
                for c in self.candidates
            ],
            "proposals": self.proposals,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def from_json_dict(cls, data: dict) -> "VideoDataset":
        frames = [FrameRow(**row) for row in data["frames"]]
        faces = [
            FaceRow(
                **{
                    **row,
                    "bbox": tuple(row["bbox"]),
                    "expanded_bbox": tuple(row["expanded_bbox"]),
                    "center": tuple(row["center"]),
                }
            )
            for row in data["faces"]
        ]
        groups = [
            GroupRow(row["group_id"], row["members"], row.get("representatives", {}))
            for row in data["groups"]
        ]
        clusters = [ClusterRow(**row) for row in data["face_clusters"]]
        candidates = []
        for row in data["candidates"]:
            raw = row["raw"]
            scores = ScoreVector(
                aesthetic=raw["aesthetic"],
                semantic=dict(raw["semantic"]),
                logo=raw["logo"],
                face_position=raw["face_position"],
                on_face_focus=raw["on_face_focus"],
                final=row["final"],
            )
            candidates.append(
                CandidateRow(
                    candidate_id=row["candidate_id"],
                    frame_id=row["frame_id"],
                    group_id=row["group_id"],
                    aspect=row["aspect"],
                    rect=tuple(row["rect"]),
                    face_ids=row["face_ids"],
                    face_centered=row["face_centered"],
                    scores=scores,
                    normalized=dict(row["normalized"]),
                )
            )
        return cls(
            video=data["video"],
            letterbox=tuple(data["letterbox"]),
            frames=frames,
            shots=data["shots"],
            groups=groups,
            faces=faces,
            face_clusters=clusters,
            chosen_k=data["chosen_k"],
            cluster_score_curve=[tuple(p) for p in data["cluster_score_curve"]],
            manual_cluster_parameters_needed=data["manual_cluster_parameters_needed"],
            candidates=candidates,
            proposals=data.get("proposals", {}),
        )

    @classmethod
    def load(cls, path) -> "VideoDataset":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))
