"""Pipeline configuration: one dataclass per stage, JSON round trip, and
the canonical digest that keys the stage cache.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    pass


@dataclass
class LetterboxConfig:
    sample_size: int = 200
    nonblack_fraction: float = 0.30
    black_level: int = 16
    sample_seed: int = 0


@dataclass
class KeyframeConfig:
    # Low-quality filter thresholds (engine defaults, all config-exposed).
    min_luminance: float = 15.0
    min_sharpness: float = 2.0
    max_uniformity: float = 0.98
    uniformity_top_fraction: float = 0.05
    # Shot boundary detection.
    boundary_sigma: float = 3.0
    boundary_window: int = 24
    min_boundary_distance: float = 0.1
    min_shot_length: int = 2
    histogram_bins_per_channel: int = 16
    # Subshot segmentation.
    target_subshot_len: int = 24
    kmeans_seed: int = 0
    kmeans_max_iter: int = 50
    hsv_bins: tuple[int, int, int] = (8, 4, 4)
    # Whole-frame metrics run at this working resolution (shortest edge,
    # frames already smaller are left at native resolution).
    working_short_edge: int = 336


@dataclass
class GroupingConfig:
    variance_target: float = 0.43
    eps: float = 0.5
    min_pts: int = 1


@dataclass
class CropConfig:
    grid_size: int = 12
    min_area_fraction: float = 0.5
    aspects: tuple[str, ...] = ("original", "16:9", "2:3")
    center_band_fraction: float = 0.40
    face_centered_band_fraction: float = 0.20
    small_face_area_ratio: float = 1.5
    border_penalty: float = 0.1
    border_width_fraction: float = 0.05
    min_image_side: int = 16


@dataclass
class FaceConfig:
    expand_factor: float = 1.2
    ear_threshold: float = 0.2


@dataclass
class FaceClusterConfig:
    variance_target: float = 0.74
    eps: float = 0.5
    min_pts: int = 50
    min_area_fraction: float = 0.05
    grid_halfwidth: int = 10
    # Eq-score cosines measured in original embedding space by default.
    score_in_original_space: bool = True


@dataclass
class ScoringConfig:
    softmax_temperature: float = 1.0
    w_aesthetic: float = 1.0
    w_semantic: float = 1.0
    w_logo: float = 1.0
    w_face_position: float = 1.0
    w_on_face_focus: float = 1.0
    face_aggregation: str = "max"  # max | mean


@dataclass
class SelectionConfig:
    k_per_section: int = 4
    main_cluster_coverage: float = 0.60
    tier_exact: float = 0.886
    tier_similar: float = 0.799


@dataclass
class KeywordClientConfig:
    endpoint: str = ""  # overridden by FRAMEPICK_KEYWORD_ENDPOINT
    max_keywords: int = 10
    max_tokens: int = 512
    retries: int = 2
    timeout_s: float = 10.0


@dataclass
class PipelineConfig:
    workers: int = 1
    letterbox: LetterboxConfig = field(default_factory=LetterboxConfig)
    keyframe: KeyframeConfig = field(default_factory=KeyframeConfig)
    grouping: GroupingConfig = field(default_factory=GroupingConfig)
    crop: CropConfig = field(default_factory=CropConfig)
    face: FaceConfig = field(default_factory=FaceConfig)
    face_cluster: FaceClusterConfig = field(default_factory=FaceClusterConfig)
    scoring: ScoringConfig = field(default_factory=ScoringConfig)
    selection: SelectionConfig = field(default_factory=SelectionConfig)
    keywords: KeywordClientConfig = field(default_factory=KeywordClientConfig)

    def validate(self):
        kf = self.keyframe
        if kf.min_luminance < 0 or kf.min_luminance > 255:
            raise ConfigError("min_luminance must be in [0,255]")
        if kf.min_sharpness < 0:
            raise ConfigError("min_sharpness must be >= 0")
        if not 0 <= kf.max_uniformity <= 1:
            raise ConfigError("max_uniformity must be in [0,1]")
        if self.grouping.eps <= 0 or self.face_cluster.eps <= 0:
            raise ConfigError("eps must be > 0")
        if self.grouping.min_pts < 1 or self.face_cluster.min_pts < 1:
            raise ConfigError("min_pts must be >= 1")
        if self.scoring.face_aggregation not in ("max", "mean"):
            raise ConfigError("face_aggregation must be 'max' or 'mean'")
        weights = (
            self.scoring.w_aesthetic,
            self.scoring.w_semantic,
            self.scoring.w_logo,
            self.scoring.w_face_position,
            self.scoring.w_on_face_focus,
        )
        if any(w < 0 for w in weights):
            raise ConfigError("score weights must be >= 0")
        if not any(w > 0 for w in weights):
            raise ConfigError("at least one score weight must be > 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self

    def to_dict(self) -> dict:
        return _asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        return _from_dict(cls, data).validate()

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def write(self, path):
        Path(path).write_text(
            json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )


def _asdict(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _asdict(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [_asdict(v) for v in obj]
    return obj


def _from_dict(cls, data: dict):
    kwargs = {}
    for f in dataclasses.fields(cls):
        if f.name not in data:
            continue
        value = data[f.name]
        if dataclasses.is_dataclass(f.type) or (
            isinstance(f.type, str) and f.type.endswith("Config")
        ):
            sub = f.default_factory()  # type: ignore[misc]
            kwargs[f.name] = _from_dict(type(sub), value)
        elif isinstance(value, list):
            kwargs[f.name] = tuple(value)
        else:
            kwargs[f.name] = value
    return cls(**kwargs)


def _canonical(value):
    """Normalize a config tree so semantically equal configs hash equal."""
    if isinstance(value, dict):
        return {k: _canonical(value[k]) for k in sorted(value)}
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)):
        # 1 and 1.0 digest identically; floats use shortest repr.
        as_float = float(value)
        if as_float.is_integer():
            return int(as_float)
        return float(repr(as_float))
    return value


def config_digest(data: dict) -> str:
    """Stable 64-bit hex digest of a canonicalized configuration tree."""
    blob = json.dumps(_canonical(data), sort_keys=True, separators=(",", ":"))
    return hashlib.blake2b(blob.encode("utf-8"), digest_size=8).hexdigest()
