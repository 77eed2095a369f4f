#!/usr/bin/env python3
"""Record review-service responses from the mini synthetic bundle into
frontend/tests/fixtures/. The frontend's parity tests assert that gallery
ordering mirrors these recorded bodies snapshot-for-snapshot.
"""
import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from framepick.config import PipelineConfig
from framepick.pipeline import run_pipeline
from framepick.service import create_app
from framepick.synth import demo_spec, generate_bundle

FIXTURE_DIR = Path(__file__).parent.parent / "frontend" / "tests" / "fixtures"


def main():
    FIXTURE_DIR.mkdir(parents=True, exist_ok=True)
    root = Path(tempfile.mkdtemp(prefix="framepick-fixtures-")) / "bundle"
    generate_bundle(root, demo_spec())
    config = PipelineConfig()
    config.face_cluster.min_pts = 8
    run_pipeline(root, config)

    app = create_app([root], clock=lambda: 1700000000.0)
    with TestClient(app) as client:
        video_id = client.get("/videos").json()["videos"][0]["video_id"]
        captures = {
            "videos.json": client.get("/videos"),
            "video.json": client.get(f"/videos/{video_id}"),
            "proposals-main-characters-2x3.json": client.get(
                f"/videos/{video_id}/proposals",
                params={"preset": "main-characters", "aspect": "2:3"},
            ),
            "proposals-per-keyword-original.json": client.get(
                f"/videos/{video_id}/proposals",
                params={"preset": "per-keyword", "aspect": "original"},
            ),
            "search-default-original.json": client.post(
                f"/videos/{video_id}/search",
                json={"aspect": "original", "page_size": 50},
            ),
            "search-aesthetic-only.json": client.post(
                f"/videos/{video_id}/search",
                json={
                    "aspect": "original",
                    "page_size": 50,
                    "weights": {
                        "aesthetic": 1, "semantic": 0, "logo": 0,
                        "face_position": 0, "on_face_focus": 0,
                    },
                },
            ),
            "search-vertical-faces.json": client.post(
                f"/videos/{video_id}/search",
                json={"aspect": "2:3", "min_faces": 1, "eyes_open_only": True,
                      "page_size": 50},
            ),
            "group-0.json": client.get(f"/videos/{video_id}/groups/0"),
            "distributions.json": client.get(f"/videos/{video_id}/score-distributions"),
        }
        for name, resp in captures.items():
            assert resp.status_code == 200, (name, resp.status_code, resp.text)
            (FIXTURE_DIR / name).write_text(
                json.dumps(resp.json(), indent=1, sort_keys=True) + "\n"
            )
            print(f"wrote {FIXTURE_DIR / name}")


if __name__ == "__main__":
    main()
