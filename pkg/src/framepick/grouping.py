"""Redundancy grouping and identity clustering: PCA with an explained-
variance cut, density clustering, shot-aware keyframe grouping, and the
grid-searched face clustering scored by the size-weighted min-cosine rule.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .config import ConfigError, FaceClusterConfig, GroupingConfig
from .model import NOISE, DomainError

log = logging.getLogger(__name__)


@dataclass
class PcaModel:
    mean: np.ndarray          # (d,)
    components: np.ndarray    # (k, d), rows orthonormal
    ratios: np.ndarray        # (k,) explained-variance ratios, non-increasing
    degenerate: bool = False  # zero total variance in the input

    @property
    def k(self) -> int:
        return self.components.shape[0]


@dataclass
class Group:
    group_id: int
    member_ids: list[int]
    # aspect tag -> candidate id, filled once finals are scored
    representatives: dict[str, str] = field(default_factory=dict)


@dataclass
class FaceCluster:
    cluster_id: int
    member_face_ids: list[str]
    size: int  # appearance data points, >= min_pts for non-noise clusters
    rank: int  # 0 = largest


@dataclass
class FaceClusterResult:
    labels: np.ndarray
    chosen_k: int
    score_curve: list[tuple[int, float]]
    manual_parameters_needed: bool = False


def fit_pca(rows: np.ndarray, variance_target: float) -> PcaModel:
    """Principal components of the sample covariance, keeping the smallest
    count whose cumulative explained-variance ratio reaches the target.

    Implemented through the SVD of the centered data matrix (the brute
    covariance eigensolve serves as the independent test oracle). Sign
    convention: the largest-magnitude entry of each component is positive.
    """
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise DomainError(f"PCA needs >= 2 rows, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DomainError("PCA input contains non-finite values")
    if not 0 < variance_target <= 1:
        raise ConfigError(f"variance_target outside (0,1]: {variance_target}")

    n, d = X.shape
    mean = X.mean(axis=0)
    centered = X - mean
    _, svals, vt = np.linalg.svd(centered, full_matrices=False)
    variances = svals**2 / (n - 1)
    total = float(variances.sum())
    if total <= 0:
        log.warning("PCA input has zero variance; returning degenerate model")
        return PcaModel(
            mean=mean,
            components=np.zeros((1, d)),
            ratios=np.ones(1),
            degenerate=True,
        )

    ratios = variances / total
    cumulative = np.cumsum(ratios)
    k = int(np.searchsorted(cumulative, variance_target - 1e-12) + 1)
    k = max(1, min(k, min(d, n - 1)))

    components = vt[:k].copy()
    for row in components:
        if row[int(np.argmax(np.abs(row)))] < 0:
            row *= -1.0
    return PcaModel(mean=mean, components=components, ratios=ratios[:k].copy())


def pca_project(model: PcaModel, rows: np.ndarray, k: int | None = None) -> np.ndarray:
    comps = model.components if k is None else model.components[:k]
    return (np.asarray(rows, dtype=np.float64) - model.mean) @ comps.T


def pca_reconstruct(model: PcaModel, projected: np.ndarray) -> np.ndarray:
    return np.asarray(projected, dtype=np.float64) @ model.components + model.mean


def _neighborhoods(points: np.ndarray, eps: float) -> list[np.ndarray]:
    """Exact eps-neighbor indices (self included) via blockwise pairwise
    distances; row blocks keep memory flat for post-downsampling sizes.
    """
    n = points.shape[0]
    sq = np.einsum("ij,ij->i", points, points)
    eps2 = eps * eps
    neighbors: list[np.ndarray] = []
    block = 512
    for start in range(0, n, block):
        stop = min(n, start + block)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * points[start:stop] @ points.T
        np.maximum(d2, 0.0, out=d2)
        for r in range(stop - start):
            neighbors.append(np.flatnonzero(d2[r] <= eps2))
    return neighbors


def dbscan(points: np.ndarray, eps: float, min_pts: int, metric: str = "euclidean") -> np.ndarray:
    """Density clustering; returns labels with noise marked -1.

    Deterministic: seeds are scanned in ascending point index and each
    cluster is fully expanded before the scan continues, so border points
    always join the earliest-created adjacent cluster.
    """
    if eps <= 0:
        raise ConfigError(f"eps must be > 0, got {eps}")
    if min_pts < 1:
        raise ConfigError(f"min_pts must be >= 1, got {min_pts}")
    if metric != "euclidean":
        raise ConfigError(f"unsupported metric {metric!r}")
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise DomainError(f"expected 2-D point matrix, got shape {points.shape}")
    n = points.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    if not np.all(np.isfinite(points)):
        raise DomainError("dbscan input contains non-finite values")

    neighbors = _neighborhoods(points, eps)
    core = np.array([len(nb) >= min_pts for nb in neighbors])
    labels = np.full(n, NOISE, dtype=np.int64)
    cluster = 0
    for seed in range(n):
        if labels[seed] != NOISE or not core[seed]:
            continue
        labels[seed] = cluster
        queue = list(neighbors[seed])
        head = 0
        while head < len(queue):
            q = queue[head]
            head += 1
            if labels[q] != NOISE:
                continue
            labels[q] = cluster
            if core[q]:
                queue.extend(neighbors[q])
        cluster += 1
    return labels


def clustering_score(labels: np.ndarray, embeddings: np.ndarray) -> float:
    """Size-weighted minimum intra-cluster cosine, minus the noise count.

    A singleton cluster has an empty pair set; its minimum cosine is
    defined as 1 (a lone embedding is perfectly self-consistent).
    """
    labels = np.asarray(labels)
    emb = np.asarray(embeddings, dtype=np.float64)
    if labels.shape[0] != emb.shape[0]:
        raise DomainError("labels must cover the embedding rows")
    norms = np.linalg.norm(emb, axis=1)
    if np.any(norms == 0):
        raise DomainError("clustering_score undefined for zero-norm embeddings")
    unit = emb / norms[:, None]

    score = 0.0
    for label in np.unique(labels):
        if label == NOISE:
            continue
        members = np.flatnonzero(labels == label)
        size = members.size
        if size == 1:
            score += 1.0
            continue
        gram = unit[members] @ unit[members].T
        min_cos = float(gram[np.triu_indices(size, k=1)].min())
        score += size * min_cos
    score -= int(np.count_nonzero(labels == NOISE))
    return score


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int):
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def group_keyframes(
    keyframe_ids: list[int],
    shot_ids: dict[int, int],
    embeddings: dict[int, np.ndarray],
    config: GroupingConfig,
) -> list[Group]:
    """Merge near-duplicate keyframes into redundancy groups.

    Embeddings are PCA-projected and density-clustered; frames then join
    the same group iff they share a cluster label and come from shots at
    most one apart. This both merges adjacent same-cluster shots and splits
    clusters that span narratively distant shots.
    """
    missing = [fid for fid in keyframe_ids if fid not in embeddings]
    if missing:
        raise DomainError(f"keyframes missing embeddings: {missing}")
    n = len(keyframe_ids)
    if n == 0:
        return []
    if n == 1:
        return [Group(0, [keyframe_ids[0]])]

    matrix = np.stack([embeddings[fid] for fid in keyframe_ids])
    model = fit_pca(matrix, config.variance_target)
    projected = pca_project(model, matrix)
    labels = dbscan(projected, eps=config.eps, min_pts=config.min_pts)

    uf = _UnionFind(n)
    for i in range(n):
        for j in range(i + 1, n):
            if labels[i] != labels[j]:
                continue
            if labels[i] == NOISE:
                continue
            if abs(shot_ids[keyframe_ids[i]] - shot_ids[keyframe_ids[j]]) <= 1:
                uf.union(i, j)

    components: dict[int, list[int]] = {}
    for i in range(n):
        components.setdefault(uf.find(i), []).append(keyframe_ids[i])
    ordered = sorted(components.values(), key=lambda ids: min(ids))
    return [Group(gid, sorted(ids)) for gid, ids in enumerate(ordered)]


def cluster_faces(embeddings: np.ndarray, config: FaceClusterConfig) -> FaceClusterResult:
    """Identity clustering with a grid-searched component count.

    The base count comes from the explained-variance target; every count
    within +-grid_halfwidth (clipped to the valid range) is evaluated by
    running density clustering in the projected space and scoring the
    labeling, by default against the original-space embeddings. Ties pick
    the smaller count. Callers must already have excluded faces below the
    minimum area fraction.
    """
    emb = np.asarray(embeddings, dtype=np.float64)
    n = emb.shape[0]
    if n < config.min_pts:
        log.warning(
            "only %d face points for min_pts=%d; flagging for manual parameters",
            n,
            config.min_pts,
        )
        return FaceClusterResult(
            labels=np.full(n, NOISE, dtype=np.int64),
            chosen_k=0,
            score_curve=[],
            manual_parameters_needed=True,
        )

    base_model = fit_pca(emb, config.variance_target)
    base_k = base_model.k
    k_max = min(emb.shape[1], n - 1)
    lo = max(1, base_k - config.grid_halfwidth)
    hi = min(k_max, base_k + config.grid_halfwidth)

    # Components are nested, so one full fit serves every candidate count.
    full_model = fit_pca(emb, 1.0)

    best_k = None
    best_score = -np.inf
    best_labels = None
    curve: list[tuple[int, float]] = []
    for k in range(lo, hi + 1):
        k_eff = min(k, full_model.k)
        projected = pca_project(full_model, emb, k=k_eff)
        labels = dbscan(projected, eps=config.eps, min_pts=config.min_pts)
        space = emb if config.score_in_original_space else projected
        score = clustering_score(labels, space)
        curve.append((k, score))
        if score > best_score:
            best_score = score
            best_k = k
            best_labels = labels

    return FaceClusterResult(
        labels=best_labels,
        chosen_k=best_k,
        score_curve=curve,
    )


def build_face_clusters(labels: np.ndarray, face_ids: list[str]) -> list[FaceCluster]:
    """Collect per-cluster membership; ``face_ids`` carries one entry per
    appearance data point, so a face may repeat across points.
    """
    by_label: dict[int, list[int]] = {}
    for i, label in enumerate(labels):
        if label == NOISE:
            continue
        by_label.setdefault(int(label), []).append(i)
    rows = []
    for label, idxs in by_label.items():
        members = sorted({face_ids[i] for i in idxs})
        rows.append((label, members, len(idxs)))
    rows.sort(key=lambda r: (-r[2], r[0]))
    return [
        FaceCluster(cluster_id=label, member_face_ids=members, size=size, rank=rank)
        for rank, (label, members, size) in enumerate(rows)
    ]
