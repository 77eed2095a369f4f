#!/usr/bin/env python3
"""End-to-end demo: generate a mini bundle, run the pipeline, print the
proposal sections, and (optionally) start the review service on it.
"""
import argparse
import tempfile
from pathlib import Path

from framepick.config import PipelineConfig
from framepick.pipeline import run_pipeline
from framepick.synth import demo_spec, generate_bundle


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--bundle", help="existing bundle (default: generate a mini one)")
    parser.add_argument("--serve", action="store_true", help="start the review service")
    parser.add_argument("--port", type=int, default=8350)
    args = parser.parse_args()

    if args.bundle:
        root = Path(args.bundle)
    else:
        root = Path(tempfile.mkdtemp(prefix="framepick-demo-")) / "bundle"
        print(f"generating mini bundle at {root} ...")
        generate_bundle(root, demo_spec())

    config = PipelineConfig()
    # the mini bundle's identity blobs hold ~44 points each; the
    # production min_pts of 50 would flag everything as noise
    config.face_cluster.min_pts = 8

    run, pipeline = run_pipeline(root, config)
    for status in run.stages:
        print(f"  {status.name:13s} {status.status:7s} {status.seconds:7.3f}s")

    ds = pipeline.build_dataset()
    print(f"\n{ds.video_id}: {sum(1 for f in ds.frames if f.is_keyframe)} keyframes, "
          f"{len(ds.groups)} groups, {len(ds.face_clusters)} identity clusters "
          f"(k={ds.chosen_k}), {len(ds.candidates)} candidates")

    for preset, per_aspect in ds.proposals.items():
        for aspect, proposal in per_aspect.items():
            if aspect != "original":
                continue
            sections = proposal["sections"]
            print(f"\n{preset} [{aspect}]"
                  + (f"  (empty: {proposal['reason']})" if proposal.get("reason") else ""))
            for section in sections:
                ids = [e["candidate_id"] for e in section["entries"]]
                print(f"  {section['key']:24s} {ids}")

    if args.serve:
        import uvicorn

        from framepick.service import create_app

        print(f"\nserving {root} on http://127.0.0.1:{args.port} ...")
        uvicorn.run(create_app([root]), host="127.0.0.1", port=args.port)


if __name__ == "__main__":
    main()
