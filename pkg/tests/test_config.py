import pytest

from framepick.config import ConfigError, PipelineConfig, config_digest


def test_roundtrip_through_dict():
    cfg = PipelineConfig()
    cfg.keyframe.min_luminance = 22.0
    cfg.crop.aspects = ("original", "16:9")
    again = PipelineConfig.from_dict(cfg.to_dict())
    assert again.keyframe.min_luminance == 22.0
    assert again.crop.aspects == ("original", "16:9")


def test_roundtrip_through_file(tmp_path):
    path = tmp_path / "config.json"
    cfg = PipelineConfig()
    cfg.grouping.eps = 0.75
    cfg.write(path)
    assert PipelineConfig.from_file(path).grouping.eps == 0.75


def test_digest_ignores_key_order_and_number_format():
    assert config_digest({"a": 1, "b": 2.5}) == config_digest({"b": 2.5, "a": 1})
    assert config_digest({"a": 1}) == config_digest({"a": 1.0})
    assert config_digest({"a": 1}) != config_digest({"a": 2})


def test_digest_differs_per_section_change():
    base = PipelineConfig().to_dict()
    changed = PipelineConfig()
    changed.scoring.w_logo = 3.0
    assert config_digest(base) != config_digest(changed.to_dict())


@pytest.mark.parametrize(
    "mutate",
    [
        lambda c: setattr(c.keyframe, "min_luminance", -3),
        lambda c: setattr(c.keyframe, "max_uniformity", 1.5),
        lambda c: setattr(c.grouping, "eps", 0.0),
        lambda c: setattr(c.face_cluster, "min_pts", 0),
        lambda c: setattr(c.scoring, "face_aggregation", "median"),
        lambda c: setattr(c, "workers", 0),
    ],
)
def test_validation_rejects_bad_values(mutate):
    cfg = PipelineConfig()
    mutate(cfg)
    with pytest.raises(ConfigError):
        cfg.validate()


def test_all_zero_weights_rejected():
    cfg = PipelineConfig()
    for name in ("w_aesthetic", "w_semantic", "w_logo", "w_face_position", "w_on_face_focus"):
        setattr(cfg.scoring, name, 0.0)
    with pytest.raises(ConfigError):
        cfg.validate()
