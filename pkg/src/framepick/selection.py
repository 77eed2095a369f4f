"""Variety presets, redundancy-aware representative picking, filtered
search with reweighting, and reference-thumbnail match evaluation.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import ConfigError, SelectionConfig
from .dataset import CandidateRow, VideoDataset
from .model import EMOTIONS, NOISE, SHOT_SCALES, DomainError
from .scoring import WeightConfig, aggregate_semantic, final_score, normalize_column

log = logging.getLogger(__name__)

PRESETS = ("main-characters", "per-emotion", "per-keyword")


@dataclass
class SearchQuery:
    aspect: str = "original"
    min_faces: Optional[int] = None
    max_faces: Optional[int] = None
    emotions: list[str] = field(default_factory=list)
    eyes_open_only: bool = False
    cluster_ids: list[int] = field(default_factory=list)
    shot_scales: list[str] = field(default_factory=list)
    keywords: list[str] = field(default_factory=list)  # empty = all keywords
    weights: WeightConfig = field(default_factory=WeightConfig)
    reverse: bool = False
    page: int = 1
    page_size: int = 24

    def __post_init__(self):
        if self.page_size < 1:
            raise ConfigError("page_size must be >= 1")
        if self.page < 1:
            raise ConfigError("page must be >= 1")


@dataclass
class SearchHit:
    candidate_id: str
    group_id: int
    final: float
    normalized: dict[str, Optional[float]]


@dataclass
class SearchResult:
    hits: list[SearchHit]
    total: int
    page: int
    page_size: int
    facets: dict


@dataclass
class ProposalEntry:
    candidate_id: str
    group_id: int
    final: float


@dataclass
class ProposalSection:
    key: str
    entries: list[ProposalEntry]
    reason: Optional[str] = None


@dataclass
class ProposalSet:
    preset: str
    aspect: str
    sections: list[ProposalSection]
    reason: Optional[str] = None

    def to_json_dict(self) -> dict:
        return {
            "preset": self.preset,
            "aspect": self.aspect,
            "reason": self.reason,
            "sections": [
                {
                    "key": s.key,
                    "reason": s.reason,
                    "entries": [vars(e).copy() for e in s.entries],
                }
                for s in self.sections
            ],
        }


def pick_group_representatives(
    candidates: list[CandidateRow],
) -> dict[int, CandidateRow]:
    """Per group, the max-final candidate; ties go to the earlier frame."""
    best: dict[int, CandidateRow] = {}
    for cand in candidates:
        cur = best.get(cand.group_id)
        if cur is None or (cand.final, -cand.frame_id) > (cur.final, -cur.frame_id):
            best[cand.group_id] = cand
    return best


def _rescore(
    ds: VideoDataset,
    candidates: list[CandidateRow],
    weights: WeightConfig,
    keywords: list[str],
) -> dict[str, float]:
    """Finals under the given weights/keyword set. The semantic column is
    re-aggregated and re-normalized over the full aspect candidate pool so
    filters never shift the normalization scope.
    """
    selected = keywords or ds.keyword_texts
    if weights.w_semantic > 0 and not selected:
        raise ConfigError("semantic weight set but the dataset has no keywords")
    if selected:
        raw_sem = [aggregate_semantic(c.scores.semantic, selected) for c in candidates]
        norm_sem = normalize_column(raw_sem)
    else:
        norm_sem = [None] * len(candidates)

    finals = {}
    for cand, sem in zip(candidates, norm_sem):
        normalized = dict(cand.normalized)
        normalized["semantic"] = sem
        finals[cand.candidate_id] = final_score(normalized, weights)
    return finals


def _dedup_by_group(
    ranked: list[CandidateRow], finals: dict[str, float]
) -> list[CandidateRow]:
    seen: set[int] = set()
    out = []
    for cand in ranked:
        if cand.group_id in seen:
            continue
        seen.add(cand.group_id)
        out.append(cand)
    return out


def _ranked(candidates: list[CandidateRow], finals: dict[str, float], reverse: bool = False):
    # Descending final; ties resolve to the earlier frame, then the id.
    order = sorted(
        candidates,
        key=lambda c: (-finals[c.candidate_id], c.frame_id, c.candidate_id),
    )
    if reverse:
        order = order[::-1]
    return order


def search(ds: VideoDataset, query: SearchQuery) -> SearchResult:
    """Conjunctive filters, re-weighted finals, group dedup, pagination."""
    pool = ds.candidates_by_aspect.get(query.aspect, [])
    unknown = [k for k in query.keywords if k not in ds.keyword_texts]
    if unknown:
        raise DomainError(
            f"unknown keywords {unknown}: register them with an embedding first"
        )
    finals = _rescore(ds, pool, query.weights, query.keywords)

    def passes(cand: CandidateRow) -> bool:
        faces = ds.contained_faces(cand)
        n = len(faces)
        if query.min_faces is not None and n < query.min_faces:
            return False
        if query.max_faces is not None and n > query.max_faces:
            return False
        if query.emotions and not any(f.emotion in query.emotions for f in faces):
            return False
        if query.eyes_open_only and any(f.eyes_closed for f in faces):
            return False
        if query.cluster_ids and not any(f.cluster_id in query.cluster_ids for f in faces):
            return False
        if query.shot_scales:
            scale = ds.frames_by_id[cand.frame_id].shot_scale
            if scale not in query.shot_scales:
                return False
        return True

    filtered = [c for c in pool if passes(c)]
    ranked = _ranked(filtered, finals)
    deduped = _dedup_by_group(ranked, finals)
    if query.reverse:
        deduped = deduped[::-1]

    facets = _facet_counts(ds, deduped)
    start = (query.page - 1) * query.page_size
    page = deduped[start : start + query.page_size]
    hits = []
    for cand in page:
        normalized = dict(cand.normalized)
        hits.append(
            SearchHit(
                candidate_id=cand.candidate_id,
                group_id=cand.group_id,
                final=finals[cand.candidate_id],
                normalized=normalized,
            )
        )
    return SearchResult(
        hits=hits,
        total=len(deduped),
        page=query.page,
        page_size=query.page_size,
        facets=facets,
    )


def _facet_counts(ds: VideoDataset, candidates: list[CandidateRow]) -> dict:
    face_counts: dict[str, int] = {}
    emotions = {e: 0 for e in EMOTIONS}
    scales = {s: 0 for s in SHOT_SCALES}
    clusters: dict[str, int] = {}
    eyes = {"open": 0, "closed": 0}
    for cand in candidates:
        faces = ds.contained_faces(cand)
        face_counts[str(len(faces))] = face_counts.get(str(len(faces)), 0) + 1
        for f in faces:
            emotions[f.emotion] += 1
            if f.cluster_id != NOISE:
                clusters[str(f.cluster_id)] = clusters.get(str(f.cluster_id), 0) + 1
        if any(f.eyes_closed for f in faces):
            eyes["closed"] += 1
        elif faces:
            eyes["open"] += 1
        scale = ds.frames_by_id[cand.frame_id].shot_scale
        if scale in scales:
            scales[scale] += 1
    return {
        "face_counts": face_counts,
        "emotions": {k: v for k, v in emotions.items() if v},
        "shot_scales": {k: v for k, v in scales.items() if v},
        "clusters": clusters,
        "eyes": eyes,
    }


def _portrait_pool(ds: VideoDataset, aspect: str) -> list[CandidateRow]:
    """Portrait preset filter: faces present, all eyes open, and the frame
    framed medium or close-up.
    """
    pool = []
    for cand in ds.candidates_by_aspect.get(aspect, []):
        faces = ds.contained_faces(cand)
        if not faces:
            continue
        if any(f.eyes_closed for f in faces):
            continue
        scale = ds.frames_by_id[cand.frame_id].shot_scale
        if scale not in ("medium", "close-up"):
            continue
        pool.append(cand)
    return pool


def _portrait_weights(base: WeightConfig) -> WeightConfig:
    return WeightConfig(
        w_aesthetic=base.w_aesthetic,
        w_semantic=0.0,
        w_logo=base.w_logo,
        w_face_position=base.w_face_position,
        w_on_face_focus=base.w_on_face_focus,
        face_aggregation=base.face_aggregation,
    )


def _top_k(
    candidates: list[CandidateRow], finals: dict[str, float], k: int
) -> list[ProposalEntry]:
    ranked = _dedup_by_group(_ranked(candidates, finals), finals)
    return [
        ProposalEntry(c.candidate_id, c.group_id, finals[c.candidate_id])
        for c in ranked[:k]
    ]


def main_character_clusters(ds: VideoDataset, coverage: float) -> tuple[list, list]:
    """Split clusters into main and secondary: the largest clusters that
    cumulatively cover the required share of clustered faces (at least
    one) are main; every other non-noise cluster is secondary.
    """
    clusters = sorted(ds.face_clusters, key=lambda c: c.rank)
    total = sum(c.size for c in clusters)
    if total == 0:
        return [], []
    main = []
    covered = 0
    for cluster in clusters:
        main.append(cluster)
        covered += cluster.size
        if covered >= coverage * total:
            break
    return main, clusters[len(main) :]


def preset_main_characters(
    ds: VideoDataset,
    aspect: str,
    config: SelectionConfig,
    weights: Optional[WeightConfig] = None,
) -> ProposalSet:
    """Top portraits per major identity cluster, semantic weight zeroed,
    plus one pooled section for the remaining (secondary) clusters.
    """
    weights = _portrait_weights(weights or WeightConfig())
    pool = _portrait_pool(ds, aspect)
    if not pool:
        return ProposalSet(
            "main-characters", aspect, [], reason="no qualifying faces (open-eyed, medium/close-up)"
        )
    finals = _rescore(ds, pool, weights, [])

    main, secondary = main_character_clusters(ds, config.main_cluster_coverage)
    sections = []
    for cluster in main:
        members = set(cluster.members)
        in_cluster = [
            c for c in pool if any(fid in members for fid in c.face_ids)
        ]
        sections.append(
            ProposalSection(
                key=f"character-{cluster.cluster_id}",
                entries=_top_k(in_cluster, finals, config.k_per_section),
                reason=None if in_cluster else "no candidates for this cluster",
            )
        )
    if secondary:
        members = {fid for cluster in secondary for fid in cluster.members}
        in_secondary = [c for c in pool if any(fid in members for fid in c.face_ids)]
        sections.append(
            ProposalSection(
                key="secondary-characters",
                entries=_top_k(in_secondary, finals, config.k_per_section),
                reason=None if in_secondary else "no candidates for secondary clusters",
            )
        )
    if not sections:
        return ProposalSet("main-characters", aspect, [], reason="no identity clusters")
    return ProposalSet("main-characters", aspect, sections)


def preset_per_emotion(
    ds: VideoDataset,
    aspect: str,
    config: SelectionConfig,
    weights: Optional[WeightConfig] = None,
) -> ProposalSet:
    """Top portraits per expressed emotion, identities ignored."""
    weights = _portrait_weights(weights or WeightConfig())
    pool = _portrait_pool(ds, aspect)
    if not pool:
        return ProposalSet(
            "per-emotion", aspect, [], reason="no qualifying faces (open-eyed, medium/close-up)"
        )
    finals = _rescore(ds, pool, weights, [])
    sections = []
    for emotion in EMOTIONS:
        matching = [
            c
            for c in pool
            if any(f.emotion == emotion for f in ds.contained_faces(c))
        ]
        if not matching:
            continue
        sections.append(
            ProposalSection(
                key=emotion,
                entries=_top_k(matching, finals, config.k_per_section),
            )
        )
    return ProposalSet("per-emotion", aspect, sections)


def preset_per_keyword(
    ds: VideoDataset,
    aspect: str,
    config: SelectionConfig,
    weights: Optional[WeightConfig] = None,
) -> ProposalSet:
    """Top matches per keyword: semantic consistency leads, alongside
    aesthetics and logo room; face scores and face filters are off.
    """
    base = weights or WeightConfig()
    kw_weights = WeightConfig(
        w_aesthetic=base.w_aesthetic or 1.0,
        w_semantic=base.w_semantic or 1.0,
        w_logo=base.w_logo or 1.0,
        w_face_position=0.0,
        w_on_face_focus=0.0,
        face_aggregation=base.face_aggregation,
    )
    keywords = ds.keyword_texts
    if not keywords:
        raise ConfigError("per-keyword preset needs a non-empty keyword list")
    pool = ds.candidates_by_aspect.get(aspect, [])
    if not pool:
        return ProposalSet("per-keyword", aspect, [], reason="no candidates for aspect")
    sections = []
    for keyword in keywords:
        finals = _rescore(ds, pool, kw_weights, [keyword])
        sections.append(
            ProposalSection(
                key=keyword,
                entries=_top_k(pool, finals, config.k_per_section),
            )
        )
    return ProposalSet("per-keyword", aspect, sections)


def build_proposals(ds: VideoDataset, config: SelectionConfig, weights=None) -> dict:
    out: dict[str, dict] = {}
    for aspect in ds.aspects():
        for preset, fn in (
            ("main-characters", preset_main_characters),
            ("per-emotion", preset_per_emotion),
            ("per-keyword", preset_per_keyword),
        ):
            try:
                proposal = fn(ds, aspect, config, weights)
            except ConfigError as exc:
                log.warning("preset %s/%s skipped: %s", preset, aspect, exc)
                continue
            out.setdefault(preset, {})[aspect] = proposal.to_json_dict()
    return out


@dataclass
class MatchReport:
    best_similarity: float
    best_id: str
    tier: str  # exact | similar | none
    tier_exact: float
    tier_similar: float


def evaluate_against_reference(
    embeddings: dict[str, np.ndarray],
    reference: np.ndarray,
    config: Optional[SelectionConfig] = None,
) -> MatchReport:
    """Closest candidate to a reference thumbnail by cosine similarity,
    bucketed into exact / similar / none against configurable thresholds
    whose defaults follow the corpus means of the evaluation study.
    """
    if not embeddings:
        raise DomainError("no candidate embeddings to match against")
    config = config or SelectionConfig()
    ref = np.asarray(reference, dtype=np.float64)
    ref_norm = np.linalg.norm(ref)
    if ref_norm == 0:
        raise DomainError("reference embedding has zero norm")
    best_id = None
    best_sim = -np.inf
    for cid in sorted(embeddings):
        vec = np.asarray(embeddings[cid], dtype=np.float64)
        sim = float(vec @ ref / (np.linalg.norm(vec) * ref_norm))
        if sim > best_sim:
            best_sim = sim
            best_id = cid
    if best_sim >= config.tier_exact:
        tier = "exact"
    elif best_sim >= config.tier_similar:
        tier = "similar"
    else:
        tier = "none"
    return MatchReport(
        best_similarity=best_sim,
        best_id=best_id,
        tier=tier,
        tier_exact=config.tier_exact,
        tier_similar=config.tier_similar,
    )


def corpus_match_report(reports: list[MatchReport]) -> dict:
    """Aggregate match tiers across videos; informational output only,
    corpus rates are tracked rather than asserted.
    """
    n = len(reports)
    if n == 0:
        return {"videos": 0}
    exact = sum(1 for r in reports if r.tier == "exact")
    similar = sum(1 for r in reports if r.tier in ("exact", "similar"))
    return {
        "videos": n,
        "exact_rate": exact / n,
        "similar_or_better_rate": similar / n,
        "mean_best_similarity": float(np.mean([r.best_similarity for r in reports])),
    }
