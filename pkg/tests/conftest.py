import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from framepick.config import PipelineConfig
from framepick.pipeline import run_pipeline
from framepick.synth import demo_spec, generate_bundle


def demo_config() -> PipelineConfig:
    """Pipeline config tuned to the mini bundle: the identity blobs hold
    ~44 appearance points each, so the production min_pts of 50 would
    flag everything as noise."""
    cfg = PipelineConfig()
    cfg.face_cluster.min_pts = 8
    return cfg


@pytest.fixture(scope="session")
def demo_bundle(tmp_path_factory):
    """Mini synthetic bundle with the pipeline already run; shared
    read-only by service and selection tests."""
    root = tmp_path_factory.mktemp("demo") / "bundle"
    generate_bundle(root, demo_spec())
    run_pipeline(root, demo_config())
    return root


@pytest.fixture()
def demo_dataset(demo_bundle):
    from framepick.dataset import VideoDataset

    return VideoDataset.load(demo_bundle / "dataset.json")


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].replace("test_", "", 1)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"\nACCEPTANCE {name}: {verdict}", flush=True)
