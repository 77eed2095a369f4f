"""Review service: read-side endpoints over immutable per-video datasets
plus an append-only, crash-safe selection log and user-keyword registry.

Responses are canonical JSON (sorted keys), so replaying a recorded
session against the same dataset and selections log reproduces identical
bodies, timestamps aside.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np
import requests as _requests
from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .config import ConfigError
from .dataset import VideoDataset
from .images import encode_png, load_rgb, strip_letterbox
from .model import ASPECT_TAGS, EMOTIONS, SHOT_SCALES, DomainError, Rect
from .scoring import WeightConfig
from .selection import SearchQuery, search
from .tensorio import read_tensor_file

log = logging.getLogger(__name__)

EMBEDDING_ENDPOINT_ENV = "FRAMEPICK_EMBEDDING_ENDPOINT"
PORT_ENV = "FRAMEPICK_PORT"


class CanonicalJSONResponse(JSONResponse):
    def render(self, content: Any) -> bytes:
        return json.dumps(
            content, sort_keys=True, separators=(",", ":"), allow_nan=False
        ).encode("utf-8")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, fields: Optional[dict] = None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.fields = fields or {}


class SelectionStore:
    """Append-only JSONL log per video with fsync-before-ack appends.

    A crash between append and ack can at worst leave one duplicate once
    the client retries; a record is never lost after fsync returns.
    """

    def __init__(self, path: Path, clock: Callable[[], float] = time.time):
        self.path = path
        self.clock = clock
        self._lock = threading.Lock()
        self._after_fsync: Optional[Callable[[], None]] = None  # test hook

    def append(self, record: dict) -> dict:
        record = dict(record)
        record["chosen_at"] = self.clock()
        line = json.dumps(record, sort_keys=True, separators=(",", ":"))
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            if self._after_fsync is not None:
                self._after_fsync()
        return record

    def records(self) -> list[dict]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError:
                    log.warning("selection log %s holds a torn line; skipped", self.path)
        return out

    def latest_by_aspect(self) -> dict[str, dict]:
        view: dict[str, dict] = {}
        for record in self.records():
            view[record["aspect"]] = record
        return view


@dataclass
class VideoState:
    root: Path
    dataset: VideoDataset
    selections: SelectionStore
    keywords_log: Path
    dataset_digest: str = ""
    write_lock: threading.Lock = field(default_factory=threading.Lock)
    _embeddings: Optional[dict[str, np.ndarray]] = None

    def candidate_embeddings(self) -> dict[str, np.ndarray]:
        """Per-candidate embeddings: the crop table where present, else
        the parent frame's embedding."""
        if self._embeddings is None:
            frame_ids, frame_matrix = read_tensor_file(
                self.root / "artifacts" / "frame_embeddings.fpk"
            )
            frames = {int(fid): frame_matrix[i] for i, fid in enumerate(frame_ids)}
            crops = {}
            crop_path = self.root / "artifacts" / "crop_embeddings.fpk"
            if crop_path.exists():
                crop_ids, crop_matrix = read_tensor_file(crop_path)
                crops = {cid: crop_matrix[i] for i, cid in enumerate(crop_ids)}
            table = {}
            for cand in self.dataset.candidates:
                vec = crops.get(cand.candidate_id)
                if vec is None:
                    vec = frames.get(cand.frame_id)
                if vec is not None:
                    table[cand.candidate_id] = np.asarray(vec, dtype=np.float64)
            self._embeddings = table
        return self._embeddings


class ServiceState:
    def __init__(
        self,
        bundle_roots: list[Path],
        clock: Callable[[], float] = time.time,
        embedding_endpoint: Optional[str] = None,
    ):
        self.clock = clock
        self.embedding_endpoint = embedding_endpoint or os.environ.get(
            EMBEDDING_ENDPOINT_ENV, ""
        )
        self.videos: dict[str, VideoState] = {}
        for root in bundle_roots:
            root = Path(root)
            dataset_path = root / "dataset.json"
            if not dataset_path.exists():
                raise ConfigError(
                    f"{root}: no dataset.json; run the pipeline before serving"
                )
            ds = VideoDataset.load(dataset_path)
            digest = hashlib.blake2b(
                dataset_path.read_bytes(), digest_size=8
            ).hexdigest()
            state = VideoState(
                root=root,
                dataset=ds,
                selections=SelectionStore(
                    root / "selections" / "selections.jsonl", clock
                ),
                keywords_log=root / "selections" / "keywords.jsonl",
                dataset_digest=digest,
            )
            self._replay_user_keywords(state)
            self.videos[ds.video_id] = state

    def _replay_user_keywords(self, state: VideoState):
        if not state.keywords_log.exists():
            return
        with open(state.keywords_log, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                row = json.loads(line)
                _register_keyword(state, row["text"], np.array(row["embedding"]))

    def video(self, video_id: str) -> VideoState:
        state = self.videos.get(video_id)
        if state is None:
            raise ApiError(404, "unknown-video", f"no video {video_id!r}")
        return state


def _register_keyword(state: VideoState, text: str, embedding: np.ndarray):
    """Attach a user keyword's semantic column to the in-memory dataset."""
    ds = state.dataset
    table = state.candidate_embeddings()
    norm = float(np.linalg.norm(embedding))
    if norm == 0:
        raise ApiError(422, "zero-embedding", "keyword embedding has zero norm")
    unit = embedding / norm
    for cand in ds.candidates:
        vec = table.get(cand.candidate_id)
        if vec is None:
            continue
        vn = float(np.linalg.norm(vec))
        if vn == 0:
            continue
        cand.scores.semantic[text] = float(vec @ unit / vn)
    existing = {k["text"] for k in ds.video.get("keywords", [])}
    if text not in existing:
        ds.video.setdefault("keywords", []).append(
            {"text": text, "source": "user-added"}
        )


def _parse_weights(data: dict, errors: dict) -> WeightConfig:
    kwargs = {}
    mapping = {
        "aesthetic": "w_aesthetic",
        "semantic": "w_semantic",
        "logo": "w_logo",
        "face_position": "w_face_position",
        "on_face_focus": "w_on_face_focus",
    }
    for key, attr in mapping.items():
        if key in data:
            try:
                value = float(data[key])
                if value < 0:
                    raise ValueError
                kwargs[attr] = value
            except (TypeError, ValueError):
                errors[f"weights.{key}"] = "must be a number >= 0"
    if "face_aggregation" in data:
        if data["face_aggregation"] not in ("max", "mean"):
            errors["weights.face_aggregation"] = "must be 'max' or 'mean'"
        else:
            kwargs["face_aggregation"] = data["face_aggregation"]
    try:
        return WeightConfig(**kwargs)
    except ConfigError as exc:
        errors["weights"] = str(exc)
        return WeightConfig()


def parse_search_query(body: dict, ds: VideoDataset) -> SearchQuery:
    """Validate a search body field by field; every problem lands in one
    400 response so the client can fix the lot."""
    errors: dict[str, str] = {}
    if not isinstance(body, dict):
        raise ApiError(400, "malformed-query", "body must be a JSON object")

    def intfield(name, default=None, minimum=None):
        if name not in body or body[name] is None:
            return default
        try:
            value = int(body[name])
        except (TypeError, ValueError):
            errors[name] = "must be an integer"
            return default
        if minimum is not None and value < minimum:
            errors[name] = f"must be >= {minimum}"
            return default
        return value

    aspect = body.get("aspect", "original")
    if aspect not in ASPECT_TAGS and aspect not in ds.candidates_by_aspect:
        errors["aspect"] = f"unknown aspect {aspect!r}"
    emotions = body.get("emotions", [])
    if not isinstance(emotions, list) or any(e not in EMOTIONS for e in emotions):
        errors["emotions"] = f"must be a list drawn from {sorted(EMOTIONS)}"
        emotions = []
    scales = body.get("shot_scales", [])
    if not isinstance(scales, list) or any(s not in SHOT_SCALES for s in scales):
        errors["shot_scales"] = f"must be a list drawn from {sorted(SHOT_SCALES)}"
        scales = []
    cluster_ids = body.get("cluster_ids", [])
    if not isinstance(cluster_ids, list) or any(
        not isinstance(c, int) for c in cluster_ids
    ):
        errors["cluster_ids"] = "must be a list of integers"
        cluster_ids = []
    keywords = body.get("keywords", [])
    if not isinstance(keywords, list) or any(not isinstance(k, str) for k in keywords):
        errors["keywords"] = "must be a list of strings"
        keywords = []
    else:
        known = set(ds.keyword_texts)
        unknown = [k for k in keywords if k not in known]
        if unknown:
            errors["keywords"] = (
                f"unknown keywords {unknown}; register them via POST /keywords first"
            )
    weights = _parse_weights(body.get("weights", {}) or {}, errors)
    min_faces = intfield("min_faces", minimum=0)
    max_faces = intfield("max_faces", minimum=0)
    page = intfield("page", default=1, minimum=1) or 1
    page_size = intfield("page_size", default=24, minimum=1) or 24

    query = None
    if not errors:
        try:
            query = SearchQuery(
                aspect=aspect,
                min_faces=min_faces,
                max_faces=max_faces,
                emotions=list(emotions),
                eyes_open_only=bool(body.get("eyes_open_only", False)),
                cluster_ids=list(cluster_ids),
                shot_scales=list(scales),
                keywords=list(keywords),
                weights=weights,
                reverse=bool(body.get("reverse", False)),
                page=page,
                page_size=page_size,
            )
        except ConfigError as exc:
            errors["query"] = str(exc)
    if errors:
        raise ApiError(400, "malformed-query", "invalid search query", fields=errors)
    return query


def _candidate_payload(ds: VideoDataset, cand, final: Optional[float] = None) -> dict:
    return {
        "candidate_id": cand.candidate_id,
        "frame_id": cand.frame_id,
        "group_id": cand.group_id,
        "aspect": cand.aspect,
        "rect": list(cand.rect),
        "face_ids": cand.face_ids,
        "face_centered": cand.face_centered,
        "scores": {
            "raw": {
                "aesthetic": cand.scores.aesthetic,
                "semantic": cand.scores.semantic,
                "logo": cand.scores.logo,
                "face_position": cand.scores.face_position,
                "on_face_focus": cand.scores.on_face_focus,
            },
            "normalized": cand.normalized,
            "final": cand.scores.final if final is None else final,
        },
    }


def create_app(
    bundle_roots: list,
    clock: Callable[[], float] = time.time,
    embedding_endpoint: Optional[str] = None,
    static_dir: Optional[Path] = None,
) -> FastAPI:
    state = ServiceState(
        [Path(r) for r in bundle_roots],
        clock=clock,
        embedding_endpoint=embedding_endpoint,
    )
    app = FastAPI(title="framepick review service")
    app.state.service = state

    @app.exception_handler(ApiError)
    async def _api_error(_request: Request, exc: ApiError):
        return CanonicalJSONResponse(
            {"error": {"code": exc.code, "message": exc.message, "fields": exc.fields}},
            status_code=exc.status,
        )

    @app.get("/videos")
    def list_videos():
        rows = []
        for video_id in sorted(state.videos):
            ds = state.videos[video_id].dataset
            rows.append(
                {
                    "video_id": video_id,
                    "title": ds.video.get("title", ""),
                    "frame_count": ds.video.get("frame_count"),
                    "duration_s": ds.video.get("duration_s"),
                    "aspects": ds.aspects(),
                }
            )
        return CanonicalJSONResponse({"videos": rows})

    @app.get("/videos/{video_id}")
    def get_video(video_id: str):
        vstate = state.video(video_id)
        ds = vstate.dataset
        return CanonicalJSONResponse(
            {
                "video": ds.video,
                "dataset_digest": vstate.dataset_digest,
                "aspects": ds.aspects(),
                "letterbox": list(ds.letterbox),
                "counts": {
                    "frames": len(ds.frames),
                    "keyframes": sum(1 for f in ds.frames if f.is_keyframe),
                    "groups": len(ds.groups),
                    "faces": len(ds.faces),
                    "candidates": len(ds.candidates),
                },
                "face_clusters": [
                    {
                        "cluster_id": c.cluster_id,
                        "size": c.size,
                        "rank": c.rank,
                        "members": len(c.members),
                    }
                    for c in ds.face_clusters
                ],
                "cluster_tuning": {
                    "chosen_k": ds.chosen_k,
                    "score_curve": [list(p) for p in ds.cluster_score_curve],
                    "manual_parameters_needed": ds.manual_cluster_parameters_needed,
                },
            }
        )

    @app.get("/videos/{video_id}/proposals")
    def get_proposals(video_id: str, preset: str = "main-characters", aspect: str = "original"):
        ds = state.video(video_id).dataset
        errors = {}
        if preset not in ds.proposals:
            errors["preset"] = f"unknown preset {preset!r}"
        elif aspect not in ds.proposals[preset]:
            errors["aspect"] = f"no proposals for aspect {aspect!r}"
        if errors:
            raise ApiError(400, "malformed-query", "invalid proposals query", fields=errors)
        proposal = ds.proposals[preset][aspect]
        sections = []
        for section in proposal["sections"]:
            sections.append(
                {
                    "key": section["key"],
                    "reason": section["reason"],
                    "entries": [
                        _candidate_payload(
                            ds, ds.candidates_by_id[e["candidate_id"]], e["final"]
                        )
                        for e in section["entries"]
                    ],
                }
            )
        return CanonicalJSONResponse(
            {
                "preset": preset,
                "aspect": aspect,
                "reason": proposal.get("reason"),
                "sections": sections,
            }
        )

    @app.post("/videos/{video_id}/search")
    async def post_search(video_id: str, request: Request):
        vstate = state.video(video_id)
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise ApiError(400, "malformed-query", "body is not valid JSON")
        query = parse_search_query(body, vstate.dataset)
        try:
            result = search(vstate.dataset, query)
        except (ConfigError, DomainError) as exc:
            raise ApiError(400, "search-failed", str(exc))
        ds = vstate.dataset
        hits = [
            _candidate_payload(ds, ds.candidates_by_id[h.candidate_id], h.final)
            for h in result.hits
        ]
        return CanonicalJSONResponse(
            {
                "hits": hits,
                "total": result.total,
                "page": result.page,
                "page_size": result.page_size,
                "facets": result.facets,
            }
        )

    @app.get("/videos/{video_id}/groups/{group_id}")
    def get_group(video_id: str, group_id: int):
        ds = state.video(video_id).dataset
        group = ds.groups_by_id.get(group_id)
        if group is None:
            raise ApiError(404, "unknown-group", f"no group {group_id}")
        members = []
        for fid in group.members:
            variants = {}
            for cand in ds.candidates:
                if cand.frame_id == fid:
                    variants[cand.aspect] = _candidate_payload(ds, cand)
            members.append({"frame_id": fid, "variants": variants})
        return CanonicalJSONResponse(
            {
                "group_id": group.group_id,
                "representatives": group.representatives,
                "members": members,
            }
        )

    @app.get("/videos/{video_id}/images/{candidate_id}")
    def get_image(video_id: str, candidate_id: str, aspect: Optional[str] = None):
        vstate = state.video(video_id)
        ds = vstate.dataset
        cand = ds.candidates_by_id.get(candidate_id)
        if cand is None:
            raise ApiError(404, "unknown-candidate", f"no candidate {candidate_id!r}")
        if aspect is not None and aspect != cand.aspect:
            sibling = next(
                (
                    c
                    for c in ds.candidates
                    if c.frame_id == cand.frame_id and c.aspect == aspect
                ),
                None,
            )
            if sibling is None:
                raise ApiError(
                    404,
                    "no-variant",
                    f"frame {cand.frame_id} has no {aspect!r} variant",
                )
            cand = sibling
        png = _materialize_crop(vstate, ds, cand)
        return Response(content=png, media_type="image/png")

    @app.get("/videos/{video_id}/score-distributions")
    def get_distributions(video_id: str, bins: int = 20):
        ds = state.video(video_id).dataset
        out: dict[str, dict] = {}
        for aspect, cands in sorted(ds.candidates_by_aspect.items()):
            cols: dict[str, list[float]] = {"final": [c.scores.final for c in cands]}
            for col in ("aesthetic", "semantic", "logo", "face_position", "on_face_focus"):
                cols[col] = [
                    c.normalized.get(col)
                    for c in cands
                    if c.normalized.get(col) is not None
                ]
            hists = {}
            edges = [i / bins for i in range(bins + 1)]
            for col, values in cols.items():
                counts = [0] * bins
                for v in values:
                    idx = min(bins - 1, max(0, int(v * bins)))
                    counts[idx] += 1
                hists[col] = {"edges": edges, "counts": counts, "n": len(values)}
            out[aspect] = hists
        return CanonicalJSONResponse({"distributions": out})

    @app.get("/videos/{video_id}/selections")
    def get_selections(video_id: str):
        vstate = state.video(video_id)
        return CanonicalJSONResponse(
            {
                "records": vstate.selections.records(),
                "latest": vstate.selections.latest_by_aspect(),
            }
        )

    @app.post("/videos/{video_id}/selections")
    async def post_selection(video_id: str, request: Request):
        vstate = state.video(video_id)
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise ApiError(400, "malformed-query", "body is not valid JSON")
        errors = {}
        candidate_id = body.get("candidate_id")
        if not isinstance(candidate_id, str) or not candidate_id:
            errors["candidate_id"] = "required string"
        aspect = body.get("aspect")
        if not isinstance(aspect, str) or not aspect:
            errors["aspect"] = "required string"
        chosen_by = body.get("chosen_by")
        if not isinstance(chosen_by, str) or not chosen_by:
            errors["chosen_by"] = "required string"
        if errors:
            raise ApiError(400, "malformed-query", "invalid selection", fields=errors)
        cand = vstate.dataset.candidates_by_id.get(candidate_id)
        if cand is None or cand.aspect != aspect:
            raise ApiError(
                409,
                "conflicting-candidate",
                f"candidate {candidate_id!r} with aspect {aspect!r} is not in the dataset",
            )
        with vstate.write_lock:
            record = vstate.selections.append(
                {
                    "video_id": video_id,
                    "candidate_id": candidate_id,
                    "aspect": aspect,
                    "chosen_by": chosen_by,
                    "note": body.get("note", ""),
                }
            )
        return CanonicalJSONResponse({"record": record}, status_code=201)

    @app.post("/videos/{video_id}/keywords")
    async def post_keyword(video_id: str, request: Request):
        vstate = state.video(video_id)
        try:
            body = await request.json()
        except json.JSONDecodeError:
            raise ApiError(400, "malformed-query", "body is not valid JSON")
        text = body.get("text")
        if not isinstance(text, str) or not text.strip():
            raise ApiError(400, "malformed-query", "invalid keyword", fields={"text": "required string"})
        text = text.strip()
        embedding = body.get("embedding")
        if embedding is None:
            if not state.embedding_endpoint:
                raise ApiError(
                    422,
                    "embedding-required",
                    "no embedding provider configured: supply 'embedding' "
                    "(a list of numbers) in the request body",
                )
            try:
                resp = _requests.post(
                    state.embedding_endpoint, json={"text": text}, timeout=10
                )
                resp.raise_for_status()
                embedding = resp.json()["embedding"]
            except Exception as exc:
                raise ApiError(502, "embedding-provider-failed", str(exc))
        try:
            vector = np.asarray(embedding, dtype=np.float64)
        except (TypeError, ValueError):
            raise ApiError(400, "malformed-query", "invalid embedding", fields={"embedding": "must be a list of numbers"})
        if vector.ndim != 1 or vector.size == 0 or not np.all(np.isfinite(vector)):
            raise ApiError(400, "malformed-query", "invalid embedding", fields={"embedding": "must be a non-empty finite vector"})
        dim = vstate.dataset.video.get("embedding_dim")
        if dim and vector.size != dim:
            raise ApiError(
                400,
                "malformed-query",
                "invalid embedding",
                fields={"embedding": f"expected dimension {dim}, got {vector.size}"},
            )
        with vstate.write_lock:
            _register_keyword(vstate, text, vector)
            vstate.keywords_log.parent.mkdir(parents=True, exist_ok=True)
            with open(vstate.keywords_log, "a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {"text": text, "embedding": [float(v) for v in vector]},
                        sort_keys=True,
                    )
                    + "\n"
                )
        return CanonicalJSONResponse({"id": text, "keywords": vstate.dataset.keyword_texts}, status_code=201)

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app


def _materialize_crop(vstate: VideoState, ds: VideoDataset, cand) -> bytes:
    """Render a candidate's pixels on demand; rendered crops are cached on
    disk keyed by (candidate, aspect, rect)."""
    rect = Rect(*cand.rect)
    key = hashlib.blake2b(
        f"{cand.candidate_id}|{cand.aspect}|{rect.x},{rect.y},{rect.w},{rect.h}".encode(),
        digest_size=8,
    ).hexdigest()
    cache_dir = vstate.root / "cache" / "crops"
    cache_path = cache_dir / f"{cand.candidate_id}-{key}.png"
    if cache_path.exists():
        return cache_path.read_bytes()

    index_path = vstate.root / "frames" / "index.json"
    index = json.loads(index_path.read_text(encoding="utf-8"))
    file_of = {row["frame_id"]: row["file"] for row in index}
    frame_file = file_of.get(cand.frame_id)
    if frame_file is None:
        raise ApiError(404, "missing-frame", f"frame {cand.frame_id} has no image")
    rgb = load_rgb(vstate.root / "frames" / frame_file)
    top, bottom = ds.letterbox
    content = strip_letterbox(rgb, top, bottom)
    crop = content[rect.y : rect.y2, rect.x : rect.x2]
    png = encode_png(crop)
    cache_dir.mkdir(parents=True, exist_ok=True)
    tmp = cache_path.with_suffix(".tmp")
    tmp.write_bytes(png)
    os.replace(tmp, cache_path)
    return png
