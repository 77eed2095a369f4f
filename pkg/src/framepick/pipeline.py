"""Stage-cached pipeline orchestration: downsample, group, crop, faces,
face-cluster, score, propose. Each stage's cache key chains its own
configuration digest with those of its dependencies, so a config change
only recomputes from the first affected stage onward.
"""
from __future__ import annotations

import csv
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import cropper, faceproc, keyframe, scoring
from .bundle import DatasetBundle, IngestError, load_bundle
from .cache import StageCache
from .config import PipelineConfig, config_digest
from .dataset import (
    CandidateRow,
    ClusterRow,
    FaceRow,
    FrameRow,
    GroupRow,
    VideoDataset,
    candidate_id_for,
)
from .grouping import build_face_clusters, cluster_faces, group_keyframes
from .images import resize_short_edge, strip_letterbox
from .keywords import KeywordExtractionError, extract_keywords_remote
from .model import NOISE, Keyword, Rect
from .scoring import ScoreVector, WeightConfig
from .selection import build_proposals

log = logging.getLogger(__name__)

STAGES = ("downsample", "group", "crop", "faces", "face-cluster", "score", "propose")

# stage -> upstream stages folded into its cache digest
_STAGE_DEPS = {
    "downsample": (),
    "group": ("downsample",),
    "crop": ("downsample",),
    "faces": ("downsample", "crop"),
    "face-cluster": ("faces", "crop"),
    "score": ("downsample", "group", "crop", "faces", "face-cluster"),
    "propose": ("score",),
}


@dataclass
class StageStatus:
    name: str
    status: str = "pending"  # pending | cached | done | failed
    digest: str = ""
    seconds: float = 0.0


@dataclass
class PipelineRun:
    video_id: str
    stages: list[StageStatus] = field(default_factory=list)
    dataset_path: Optional[Path] = None

    @property
    def cache_hits(self) -> int:
        return sum(1 for s in self.stages if s.status == "cached")

    def status_of(self, name: str) -> str:
        return next(s.status for s in self.stages if s.name == name)


def resolve_keywords(bundle: DatasetBundle, config: PipelineConfig):
    """Fill empty manifest keywords from the remote extractor when one is
    configured; extracted strings must have embeddings in the bundle's
    keyword table. Failures fall back to the metadata keywords.
    """
    manifest = bundle.manifest
    if manifest.keywords:
        return
    import os

    if not (config.keywords.endpoint or os.environ.get("FRAMEPICK_KEYWORD_ENDPOINT")):
        return
    try:
        texts = extract_keywords_remote(manifest.summary, manifest.title, config.keywords)
    except KeywordExtractionError as exc:
        log.warning("remote keyword extraction failed, using metadata keywords: %s", exc)
        return
    table = bundle.artifacts.keyword_embeddings
    resolved = []
    for text in texts:
        emb = table.get(text)
        if emb is None:
            log.warning("extracted keyword %r has no embedding in the bundle; skipped", text)
            continue
        resolved.append(Keyword(text=text, embedding=emb, source="remote-extraction"))
    manifest.keywords = resolved


class Pipeline:
    def __init__(self, bundle: DatasetBundle, config: Optional[PipelineConfig] = None):
        self.bundle = bundle
        self.config = (config or PipelineConfig()).validate()
        self.cache = StageCache(bundle.cache_dir)
        self._results: dict[str, dict] = {}
        self._digests: dict[str, str] = {}

    # -- digests ---------------------------------------------------------

    def _stage_config(self, stage: str) -> dict:
        cfg = self.config
        return {
            "downsample": {
                "letterbox": cfg.letterbox,
                "keyframe": cfg.keyframe,
            },
            "group": {"grouping": cfg.grouping},
            "crop": {"crop": cfg.crop},
            "faces": {"face": cfg.face},
            "face-cluster": {"face_cluster": cfg.face_cluster},
            "score": {"scoring": cfg.scoring, "aspects": list(cfg.crop.aspects)},
            "propose": {"selection": cfg.selection},
        }[stage]

    def stage_digest(self, stage: str) -> str:
        if stage not in self._digests:
            own = config_digest(_asdict_tree(self._stage_config(stage)))
            parents = [self.stage_digest(dep) for dep in _STAGE_DEPS[stage]]
            self._digests[stage] = config_digest({"own": own, "parents": parents})
        return self._digests[stage]

    # -- execution ---------------------------------------------------------

    def result(self, stage: str) -> dict:
        """Stage payload, from memory, cache, or a fresh computation."""
        if stage in self._results:
            return self._results[stage]
        payload = self.cache.get_json(stage, self.stage_digest(stage))
        if payload is None:
            self._compute(stage)
        else:
            self._results[stage] = payload
        return self._results[stage]

    def _compute(self, stage: str):
        fn = {
            "downsample": self._stage_downsample,
            "group": self._stage_group,
            "crop": self._stage_crop,
            "faces": self._stage_faces,
            "face-cluster": self._stage_face_cluster,
            "score": self._stage_score,
            "propose": self._stage_propose,
        }[stage]
        payload = fn()
        self._results[stage] = payload
        self.cache.put_json(stage, self.stage_digest(stage), payload)

    def run(self, force: bool = False) -> PipelineRun:
        resolve_keywords(self.bundle, self.config)
        run = PipelineRun(video_id=self.bundle.manifest.video_id)
        for stage in STAGES:
            digest = self.stage_digest(stage)
            status = StageStatus(stage, digest=digest)
            started = time.perf_counter()
            try:
                if not force and self.cache.has(stage, digest) and self._stage_output_ok(stage):
                    status.status = "cached"
                else:
                    self._compute(stage)
                    status.status = "done"
            except Exception:
                status.status = "failed"
                run.stages.append(status)
                raise
            finally:
                status.seconds = time.perf_counter() - started
                if status.status != "failed":
                    run.stages.append(status)
        run.dataset_path = self.bundle.dataset_path
        return run

    def _stage_output_ok(self, stage: str) -> bool:
        # propose also materializes the dataset file next to the cache
        if stage == "propose":
            return self.bundle.dataset_path.exists()
        return True

    # -- stage: downsample -------------------------------------------------

    def _stage_downsample(self) -> dict:
        bundle = self.bundle
        cfg = self.config
        frame_ids = sorted(bundle.frame_files)
        if not frame_ids:
            raise IngestError("bundle has no frames")

        def load(fid: int) -> np.ndarray:
            return bundle.load_frame_image(fid)

        workers = cfg.workers
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                images = list(pool.map(load, frame_ids))
        else:
            images = [load(fid) for fid in frame_ids]
        by_id = dict(zip(frame_ids, images))

        sample_ids = cropper.sample_frame_ids(frame_ids, cfg.letterbox)
        estimate = cropper.detect_letterbox([by_id[i] for i in sample_ids], cfg.letterbox)
        top, bottom = estimate.top_rows, estimate.bottom_rows

        def prepare(fid: int) -> np.ndarray:
            stripped = strip_letterbox(by_id[fid], top, bottom)
            return resize_short_edge(stripped, cfg.keyframe.working_short_edge)

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                prepared = list(pool.map(prepare, frame_ids))
        else:
            prepared = [prepare(fid) for fid in frame_ids]
        prepared_by_id = dict(zip(frame_ids, prepared))
        del images, by_id

        pairs = [
            (fid, prepared_by_id[fid], prepared_by_id[frame_ids[i - 1]] if i else None)
            for i, fid in enumerate(frame_ids)
        ]

        def metrics_for(pair):
            fid, img, prev = pair
            return fid, keyframe.compute_frame_metrics(
                img, prev, top_fraction=cfg.keyframe.uniformity_top_fraction
            )

        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                metric_rows = list(pool.map(metrics_for, pairs))
        else:
            metric_rows = [metrics_for(p) for p in pairs]

        kept = keyframe.filter_low_quality(metric_rows, cfg.keyframe)
        metrics = {fid: m for fid, m in metric_rows}

        hists = np.stack(
            [
                keyframe.rgb_histogram(prepared_by_id[fid], cfg.keyframe.histogram_bins_per_channel)
                for fid in kept
            ]
        ) if kept else np.zeros((0, 0))
        shots, transitions = keyframe.detect_shots(kept, hists, cfg.keyframe)

        stillness = {fid: metrics[fid].stillness for fid in kept}
        subshots = []
        next_id = 0
        for shot in shots:
            feats = np.stack(
                [keyframe.hsv_histogram(prepared_by_id[fid], cfg.keyframe.hsv_bins) for fid in shot.member_ids]
            )
            rows = keyframe.segment_subshots(
                shot, feats, stillness, transitions, cfg.keyframe, first_subshot_id=next_id
            )
            next_id += len(rows)
            subshots.extend(rows)

        first = bundle.frames[0]
        content_w = first.width
        content_h = first.height - top - bottom
        keyframe_ids = [ss.keyframe_id for ss in subshots]
        # tracked corpus metric, not a gate: share of frames surviving as
        # keyframes (the reference corpus figure is a few percent)
        extraction_ratio = len(keyframe_ids) / len(frame_ids)
        log.info(
            "downsample: %d/%d frames kept, %d shots, %d keyframes (ratio %.4f)",
            len(kept), len(frame_ids), len(shots), len(keyframe_ids), extraction_ratio,
        )
        return {
            "letterbox": [top, bottom],
            "content_size": [content_w, content_h],
            "extraction_ratio": extraction_ratio,
            "metrics": {
                str(fid): {
                    "luminance": m.luminance,
                    "sharpness": m.sharpness,
                    "uniformity": m.uniformity,
                    "stillness": m.stillness,
                }
                for fid, m in metrics.items()
            },
            "kept": kept,
            "shots": [
                {
                    "shot_id": s.shot_id,
                    "first_id": s.first_id,
                    "last_id": s.last_id,
                    "confidence": s.confidence,
                    "members": s.member_ids,
                }
                for s in shots
            ],
            "subshots": [
                {
                    "subshot_id": ss.subshot_id,
                    "shot_id": ss.shot_id,
                    "members": ss.member_ids,
                    "keyframe_id": ss.keyframe_id,
                }
                for ss in subshots
            ],
            "keyframes": keyframe_ids,
            "transitions": sorted(transitions),
        }

    # -- stage: group --------------------------------------------------------

    def _stage_group(self) -> dict:
        down = self.result("downsample")
        keyframes = down["keyframes"]
        shot_of = {}
        for shot in down["shots"]:
            for fid in shot["members"]:
                shot_of[fid] = shot["shot_id"]
        table = self.bundle.artifacts.frame_embeddings
        embeddings = {fid: table[fid].values for fid in keyframes if fid in table}
        groups = group_keyframes(
            keyframes, shot_of, embeddings, self.config.grouping
        )
        return {"groups": [{"group_id": g.group_id, "members": g.member_ids} for g in groups]}

    # -- stage: crop ----------------------------------------------------------

    def _faces_by_frame(self, top: int, content_w: int, content_h: int) -> dict[int, list]:
        """Ingested face boxes translated into post-letterbox coordinates."""
        out: dict[int, list] = {}
        for raw in self.bundle.artifacts.faces:
            rect = raw.bbox.translated(0, -top)
            try:
                rect = rect.clamped(content_w, content_h)
            except Exception:
                log.warning("face %s lies outside the content area; skipped", raw.face_id)
                continue
            out.setdefault(raw.frame_id, []).append((raw.face_id, rect))
        return out

    def _stage_crop(self) -> dict:
        down = self.result("downsample")
        top, _bottom = down["letterbox"]
        content_w, content_h = down["content_size"]
        cfg = self.config.crop
        faces_by_frame = self._faces_by_frame(top, content_w, content_h)

        rows = []
        for fid in down["keyframes"]:
            saliency = self.bundle.load_saliency(fid)
            grid = saliency.grid if saliency is not None else np.ones((8, 8))
            sal = cropper.SaliencyGrid(grid, content_w, content_h)
            scorer = cropper.make_saliency_scorer(sal, cfg)
            face_rects = [rect for _, rect in faces_by_frame.get(fid, [])]
            for aspect in cfg.aspects:
                candidates = cropper.generate_crop_candidates(
                    content_w, content_h, aspect, cfg
                )
                cropper.filter_crops(candidates, face_rects, cfg)
                ranked = cropper.rank_crops(candidates, scorer)
                if ranked.best is None:
                    continue
                emitted = [("best", ranked.best)]
                if ranked.face_centered_alternate is not None:
                    emitted.append(("fc", ranked.face_centered_alternate))
                for kind, cand in emitted:
                    rows.append(
                        {
                            "candidate_id": candidate_id_for(fid, aspect, kind == "fc"),
                            "frame_id": fid,
                            "aspect": aspect,
                            "rect": [cand.rect.x, cand.rect.y, cand.rect.w, cand.rect.h],
                            "face_centered": cand.face_centered,
                            "kind": kind,
                            "heuristic_score": cand.score,
                            "fallback_reason": ranked.fallback_reason,
                        }
                    )
        return {"candidates": rows}

    # -- stage: faces -----------------------------------------------------------

    def _stage_faces(self) -> dict:
        down = self.result("downsample")
        top, _ = down["letterbox"]
        content_w, content_h = down["content_size"]
        cfg = self.config.face
        art = self.bundle.artifacts

        face_rows = []
        for raw in art.faces:
            rect = raw.bbox.translated(0, -top)
            try:
                rect = rect.clamped(content_w, content_h)
            except Exception:
                continue
            expanded = faceproc.expand_bbox(rect, content_w, content_h, cfg.expand_factor)
            landmarks = art.landmarks.get(raw.face_id)
            if landmarks is not None:
                landmarks = _translate_landmarks(landmarks, 0, -top)
            state = faceproc.classify_eyes(landmarks, cfg.ear_threshold)
            center, fallback = faceproc.face_center(landmarks, rect)
            face_rows.append(
                {
                    "face_id": raw.face_id,
                    "frame_id": raw.frame_id,
                    "bbox": [rect.x, rect.y, rect.w, rect.h],
                    "expanded_bbox": [expanded.x, expanded.y, expanded.w, expanded.h],
                    "area_fraction": rect.area / (content_w * content_h),
                    "ear_left": state.ear_left,
                    "ear_right": state.ear_right,
                    "eyes_closed": state.closed,
                    "eyes_known": state.known,
                    "emotion": art.emotions.get(raw.face_id, "neutral"),
                    "center": [center[0], center[1]],
                    "center_fallback": fallback,
                }
            )

        labels = dict(art.shot_scales)
        keyframes = down["keyframes"]
        unlabeled = [fid for fid in keyframes if fid not in labels]
        if unlabeled and labels:
            raise IngestError(f"keyframes missing shot-scale labels: {unlabeled}")
        smoothed = {}
        if labels:
            shots = [
                keyframe.Shot(
                    s["shot_id"], s["first_id"], s["last_id"], s["confidence"], s["members"]
                )
                for s in down["shots"]
            ]
            timestamps = {f.frame_id: f.timestamp_s for f in self.bundle.frames}
            smoothed = faceproc.smooth_shot_scale(labels, shots, timestamps)
        return {
            "faces": face_rows,
            "shot_scale": {str(fid): label for fid, label in smoothed.items()},
        }

    # -- stage: face-cluster -------------------------------------------------

    def _stage_face_cluster(self) -> dict:
        faces = self.result("faces")["faces"]
        crop_rows = self.result("crop")["candidates"]
        kept = set(self.result("downsample")["kept"])
        cfg = self.config.face_cluster
        table = self.bundle.artifacts.face_embeddings

        crops_by_frame: dict[int, list[dict]] = {}
        for row in crop_rows:
            crops_by_frame.setdefault(row["frame_id"], []).append(row)

        points = []
        owners = []
        missing = []
        for face in faces:
            # every face on a surviving frame is a data point; keyframe
            # faces add one more point per selected crop containing them
            if face["frame_id"] not in kept:
                continue
            if face["area_fraction"] < cfg.min_area_fraction:
                continue
            emb = table.get(face["face_id"])
            if emb is None:
                missing.append(face["face_id"])
                continue
            bbox = Rect(*face["bbox"])
            # one point per appearance: the keyframe itself plus every
            # selected crop that fully contains the face
            points.append(emb.values)
            owners.append(face["face_id"])
            for row in crops_by_frame.get(face["frame_id"], []):
                if row["aspect"] == "original":
                    continue
                if Rect(*row["rect"]).contains_rect(bbox):
                    points.append(emb.values)
                    owners.append(face["face_id"])
        if missing:
            raise IngestError(f"faces missing embeddings: {sorted(missing)}")

        if not points:
            return {
                "labels": {},
                "clusters": [],
                "chosen_k": 0,
                "curve": [],
                "manual_parameters_needed": True,
            }

        result = cluster_faces(np.stack(points), cfg)
        label_of: dict[str, int] = {}
        for owner, label in zip(owners, result.labels):
            label_of.setdefault(owner, int(label))
        clusters = build_face_clusters(result.labels, owners)
        return {
            "labels": label_of,
            "clusters": [
                {
                    "cluster_id": c.cluster_id,
                    "members": c.member_face_ids,
                    "size": c.size,
                    "rank": c.rank,
                }
                for c in clusters
            ],
            "chosen_k": result.chosen_k,
            "curve": [[k, s] for k, s in result.score_curve],
            "manual_parameters_needed": result.manual_parameters_needed,
        }

    # -- stage: score ------------------------------------------------------------

    def _stage_score(self) -> dict:
        bundle = self.bundle
        cfg = self.config
        down = self.result("downsample")
        groups = self.result("group")["groups"]
        crop_rows = self.result("crop")["candidates"]
        faces_payload = self.result("faces")
        labels = self.result("face-cluster")["labels"]

        content_w, content_h = down["content_size"]
        group_of = {}
        for g in groups:
            for fid in g["members"]:
                group_of[fid] = g["group_id"]

        faces_by_frame: dict[int, list[dict]] = {}
        for face in faces_payload["faces"]:
            faces_by_frame.setdefault(face["frame_id"], []).append(face)

        prior = bundle.artifacts.logo_prior
        if prior is None:
            raise IngestError("logo prior artifact missing; scoring needs it")
        prompts = bundle.artifacts.prompt_embeddings
        for pid in ("good", "bad"):
            if pid not in prompts:
                raise IngestError(f"prompt embedding {pid!r} missing; scoring needs it")

        keywords = [kw.text for kw in bundle.manifest.keywords]
        kw_matrix = (
            np.stack([kw.embedding.values for kw in bundle.manifest.keywords])
            if keywords
            else None
        )

        missing_saliency = [
            fid for fid in down["keyframes"] if fid not in bundle.saliency_files
        ]
        if missing_saliency:
            raise IngestError(
                f"saliency maps missing for frames: {sorted(missing_saliency)}"
            )

        frame_table = bundle.artifacts.frame_embeddings
        crop_table = bundle.artifacts.crop_embeddings
        saliency_cache: dict[int, cropper.SaliencyGrid] = {}

        def saliency_for(fid: int) -> cropper.SaliencyGrid:
            if fid not in saliency_cache:
                saliency_cache[fid] = cropper.SaliencyGrid(
                    bundle.load_saliency(fid).grid, content_w, content_h
                )
            return saliency_cache[fid]

        rows = []
        for crop_row in crop_rows:
            fid = crop_row["frame_id"]
            cid = crop_row["candidate_id"]
            rect = Rect(*crop_row["rect"])
            embedding = crop_table.get(cid) or frame_table.get(fid)
            if embedding is None:
                raise IngestError(f"frame {fid} has no embedding; cannot score {cid}")

            aesthetic = scoring.aesthetic_score(
                embedding,
                prompts["good"],
                prompts["bad"],
                cfg.scoring.softmax_temperature,
            )
            semantic = {}
            if kw_matrix is not None:
                cosines = scoring.semantic_scores(
                    embedding.values[None, :], kw_matrix
                )[0]
                semantic = {kw: float(v) for kw, v in zip(keywords, cosines)}

            contained = []
            for face in faces_by_frame.get(fid, []):
                if rect.contains_rect(Rect(*face["bbox"])):
                    contained.append(face)

            sal = saliency_for(fid)
            crop_grid = sal.slice_rect(rect)
            # faces clipped to the candidate and shifted into its frame
            clipped = []
            for face in faces_by_frame.get(fid, []):
                fb = Rect(*face["bbox"])
                if rect.intersection_area(fb) == 0:
                    continue
                ix1 = max(rect.x, fb.x) - rect.x
                iy1 = max(rect.y, fb.y) - rect.y
                ix2 = min(rect.x2, fb.x2) - rect.x
                iy2 = min(rect.y2, fb.y2) - rect.y
                clipped.append(Rect(ix1, iy1, ix2 - ix1, iy2 - iy1))
            logo = scoring.logo_score(prior.grid, crop_grid, clipped, rect.w, rect.h)

            contained_rects = [
                Rect(*f["bbox"]).translated(-rect.x, -rect.y) for f in contained
            ]
            on_face = scoring.on_face_focus(crop_grid, contained_rects, rect.w, rect.h)
            if contained:
                position_scores = [
                    scoring.face_position_score(
                        f["center"][0] - rect.x, f["center"][1] - rect.y, rect.w, rect.h
                    )
                    for f in contained
                ]
                face_position = scoring.aggregate_faces(
                    position_scores, cfg.scoring.face_aggregation
                )
            else:
                face_position = None

            rows.append(
                {
                    "candidate_id": cid,
                    "frame_id": fid,
                    "group_id": group_of.get(fid, -1),
                    "aspect": crop_row["aspect"],
                    "rect": crop_row["rect"],
                    "face_ids": [f["face_id"] for f in contained],
                    "face_centered": crop_row["face_centered"],
                    "raw": {
                        "aesthetic": aesthetic,
                        "semantic": semantic,
                        "logo": logo,
                        "face_position": face_position,
                        "on_face_focus": on_face,
                    },
                }
            )

        weights = WeightConfig.from_scoring_config(cfg.scoring)
        _normalize_and_finalize(rows, keywords, weights)

        representatives: dict[str, dict[str, str]] = {}
        by_aspect: dict[str, list[dict]] = {}
        for row in rows:
            by_aspect.setdefault(row["aspect"], []).append(row)
        for aspect, aspect_rows in by_aspect.items():
            best: dict[int, dict] = {}
            for row in aspect_rows:
                gid = row["group_id"]
                cur = best.get(gid)
                if cur is None or (row["final"], -row["frame_id"]) > (
                    cur["final"],
                    -cur["frame_id"],
                ):
                    best[gid] = row
            for gid, row in best.items():
                representatives.setdefault(str(gid), {})[aspect] = row["candidate_id"]

        self._write_score_table(rows)
        return {"candidates": rows, "representatives": representatives}

    def _write_score_table(self, rows: list[dict]):
        """Flat columnar export of raw and normalized scores for the UI's
        distribution plots."""
        path = self.bundle.cache_dir / "scores.csv"
        columns = [
            "candidate_id",
            "aspect",
            "raw_aesthetic",
            "raw_semantic",
            "raw_logo",
            "raw_face_position",
            "raw_on_face_focus",
            "norm_aesthetic",
            "norm_semantic",
            "norm_logo",
            "norm_face_position",
            "norm_on_face_focus",
            "final",
        ]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(columns)
            for row in rows:
                raw = row["raw"]
                norm = row["normalized"]
                sem_values = list(raw["semantic"].values())
                raw_sem = sum(sem_values) / len(sem_values) if sem_values else ""
                writer.writerow(
                    [
                        row["candidate_id"],
                        row["aspect"],
                        raw["aesthetic"],
                        raw_sem,
                        raw["logo"],
                        _blank(raw["face_position"]),
                        _blank(raw["on_face_focus"]),
                        _blank(norm["aesthetic"]),
                        _blank(norm["semantic"]),
                        _blank(norm["logo"]),
                        _blank(norm["face_position"]),
                        _blank(norm["on_face_focus"]),
                        row["final"],
                    ]
                )

    # -- stage: propose ------------------------------------------------------------

    def _stage_propose(self) -> dict:
        ds = self.build_dataset(with_proposals=False)
        ds.proposals = build_proposals(
            ds,
            self.config.selection,
            WeightConfig.from_scoring_config(self.config.scoring),
        )
        ds.write(self.bundle.dataset_path)
        return {"proposals": ds.proposals}

    # -- assembly ---------------------------------------------------------------

    def build_dataset(self, with_proposals: bool = True) -> VideoDataset:
        down = self.result("downsample")
        group_payload = self.result("group")
        faces_payload = self.result("faces")
        cluster_payload = self.result("face-cluster")
        score_payload = self.result("score")

        manifest = self.bundle.manifest
        top, bottom = down["letterbox"]

        shot_of = {}
        for shot in down["shots"]:
            for fid in shot["members"]:
                shot_of[fid] = shot["shot_id"]
        subshot_of = {}
        keyframe_group: dict[int, int] = {}
        for g in group_payload["groups"]:
            for fid in g["members"]:
                keyframe_group[fid] = g["group_id"]
        group_of_frame: dict[int, int] = {}
        for ss in down["subshots"]:
            gid = keyframe_group.get(ss["keyframe_id"], -1)
            for fid in ss["members"]:
                subshot_of[fid] = ss["subshot_id"]
                group_of_frame[fid] = gid

        keyframes = set(down["keyframes"])
        transitions = set(down["transitions"])
        scale_of = {int(k): v for k, v in faces_payload["shot_scale"].items()}

        frames = []
        for f in self.bundle.frames:
            metrics = down["metrics"].get(str(f.frame_id), {})
            frames.append(
                FrameRow(
                    frame_id=f.frame_id,
                    timestamp_s=f.timestamp_s,
                    width=f.width,
                    height=f.height,
                    shot_id=shot_of.get(f.frame_id, -1),
                    subshot_id=subshot_of.get(f.frame_id, -1),
                    group_id=group_of_frame.get(f.frame_id, -1),
                    is_keyframe=f.frame_id in keyframes,
                    is_transition=f.frame_id in transitions,
                    shot_scale=scale_of.get(f.frame_id),
                    metrics=metrics,
                )
            )

        labels = cluster_payload["labels"]
        faces = [
            FaceRow(
                face_id=row["face_id"],
                frame_id=row["frame_id"],
                bbox=tuple(row["bbox"]),
                expanded_bbox=tuple(row["expanded_bbox"]),
                area_fraction=row["area_fraction"],
                ear_left=row["ear_left"],
                ear_right=row["ear_right"],
                eyes_closed=row["eyes_closed"],
                eyes_known=row["eyes_known"],
                emotion=row["emotion"],
                cluster_id=labels.get(row["face_id"], NOISE),
                center=tuple(row["center"]),
                center_fallback=row["center_fallback"],
            )
            for row in faces_payload["faces"]
        ]

        groups = []
        reps = score_payload["representatives"]
        for g in group_payload["groups"]:
            groups.append(
                GroupRow(
                    group_id=g["group_id"],
                    members=g["members"],
                    representatives=reps.get(str(g["group_id"]), {}),
                )
            )

        clusters = [
            ClusterRow(
                cluster_id=c["cluster_id"],
                members=c["members"],
                size=c["size"],
                rank=c["rank"],
            )
            for c in cluster_payload["clusters"]
        ]

        candidates = []
        for row in score_payload["candidates"]:
            raw = row["raw"]
            candidates.append(
                CandidateRow(
                    candidate_id=row["candidate_id"],
                    frame_id=row["frame_id"],
                    group_id=row["group_id"],
                    aspect=row["aspect"],
                    rect=tuple(row["rect"]),
                    face_ids=row["face_ids"],
                    face_centered=row["face_centered"],
                    scores=ScoreVector(
                        aesthetic=raw["aesthetic"],
                        semantic=dict(raw["semantic"]),
                        logo=raw["logo"],
                        face_position=raw["face_position"],
                        on_face_focus=raw["on_face_focus"],
                        final=row["final"],
                    ),
                    normalized=dict(row["normalized"]),
                )
            )

        video = {
            "video_id": manifest.video_id,
            "title": manifest.title,
            "summary": manifest.summary,
            "fps": manifest.fps,
            "frame_count": manifest.frame_count,
            "duration_s": manifest.duration_s,
            "embedding_dim": manifest.embedding_dim,
            "keywords": [
                {"text": kw.text, "source": kw.source} for kw in manifest.keywords
            ],
        }

        ds = VideoDataset(
            video=video,
            letterbox=(top, bottom),
            frames=frames,
            shots=down["shots"],
            groups=groups,
            faces=faces,
            face_clusters=clusters,
            chosen_k=cluster_payload["chosen_k"],
            cluster_score_curve=[tuple(p) for p in cluster_payload["curve"]],
            manual_cluster_parameters_needed=cluster_payload["manual_parameters_needed"],
            candidates=candidates,
            proposals=self.result("propose")["proposals"] if with_proposals else {},
        )
        return ds


def _blank(value):
    return "" if value is None else value


def _normalize_and_finalize(rows: list[dict], keywords: list[str], weights: WeightConfig):
    """Min-max normalize each score column per aspect tag and fill finals
    under the default weights; the stored semantic column aggregates over
    the full keyword set."""
    from .scoring import aggregate_semantic, final_score, normalize_column

    by_aspect: dict[str, list[dict]] = {}
    for row in rows:
        by_aspect.setdefault(row["aspect"], []).append(row)
    for aspect_rows in by_aspect.values():
        columns: dict[str, list] = {
            "aesthetic": [r["raw"]["aesthetic"] for r in aspect_rows],
            "semantic": [
                aggregate_semantic(r["raw"]["semantic"], keywords) if keywords else None
                for r in aspect_rows
            ],
            "logo": [r["raw"]["logo"] for r in aspect_rows],
            "face_position": [r["raw"]["face_position"] for r in aspect_rows],
            "on_face_focus": [r["raw"]["on_face_focus"] for r in aspect_rows],
        }
        normalized = {col: normalize_column(vals) for col, vals in columns.items()}
        for i, row in enumerate(aspect_rows):
            norm = {col: normalized[col][i] for col in columns}
            row["normalized"] = norm
            row["final"] = final_score(norm, weights)


def _translate_landmarks(landmarks, dx: float, dy: float):
    from .model import EyeLandmarks

    def shift(pts):
        if pts is None:
            return None
        out = pts.copy()
        out[:, 0] += dx
        out[:, 1] += dy
        return out

    return EyeLandmarks(
        scheme=landmarks.scheme,
        left_eye=shift(landmarks.left_eye),
        right_eye=shift(landmarks.right_eye),
    )


def _asdict_tree(tree: dict) -> dict:
    from .config import _asdict

    return {
        key: _asdict(value) if hasattr(value, "__dataclass_fields__") else value
        for key, value in tree.items()
    }


def run_pipeline(
    root, config: Optional[PipelineConfig] = None, force: bool = False
) -> tuple[PipelineRun, Pipeline]:
    """Load the bundle at ``root`` and run every stage through the cache."""
    bundle = load_bundle(root)
    pipeline = Pipeline(bundle, config)
    run = pipeline.run(force=force)
    return run, pipeline
