#!/usr/bin/env python3
"""Reference-thumbnail match report for one or more processed bundles.

For each bundle, picks the closest candidate to a reference embedding
(given as an FPK1 file with one row per video id, or sampled from the
bundle's own frames with --self-check) and reports the similarity tier.
Corpus-level rates are informational output, not a pass/fail gate.
"""
import argparse
import json
from pathlib import Path

import numpy as np

from framepick.dataset import VideoDataset
from framepick.selection import corpus_match_report, evaluate_against_reference
from framepick.tensorio import read_tensor_file


def candidate_embeddings(root: Path, ds: VideoDataset) -> dict[str, np.ndarray]:
    ids, matrix = read_tensor_file(root / "artifacts" / "frame_embeddings.fpk")
    frames = {int(i): matrix[k] for k, i in enumerate(ids)}
    out = {}
    for cand in ds.candidates:
        if cand.aspect != "original":
            continue
        vec = frames.get(cand.frame_id)
        if vec is not None:
            out[cand.candidate_id] = np.asarray(vec, dtype=np.float64)
    return out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("bundles", nargs="+", help="processed bundle directories")
    parser.add_argument("--references", help="FPK1 file, one row id per video id")
    parser.add_argument(
        "--self-check",
        action="store_true",
        help="use each bundle's own first frame embedding as the reference",
    )
    args = parser.parse_args()
    if not args.references and not args.self_check:
        parser.error("need --references or --self-check")

    ref_table = {}
    if args.references:
        ids, matrix = read_tensor_file(args.references)
        ref_table = {rid: matrix[i] for i, rid in enumerate(ids)}

    reports = []
    for bundle in args.bundles:
        root = Path(bundle)
        ds = VideoDataset.load(root / "dataset.json")
        embeddings = candidate_embeddings(root, ds)
        if args.self_check:
            reference = next(iter(embeddings.values()))
        else:
            reference = ref_table[ds.video_id]
        report = evaluate_against_reference(embeddings, np.asarray(reference, float))
        reports.append(report)
        print(
            f"{ds.video_id}: best={report.best_id} "
            f"similarity={report.best_similarity:.4f} tier={report.tier}"
        )

    print(json.dumps(corpus_match_report(reports), indent=2))


if __name__ == "__main__":
    main()
