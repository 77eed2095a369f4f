#!/usr/bin/env python3
"""Generate a synthetic dataset bundle with planted structure.

The default spec matches the validation suite's 500-frame, 320x180,
10-shot video; --mini emits the small 120-frame variant used by the
service and UI fixtures.
"""
import argparse
from pathlib import Path

from framepick.synth import SynthSpec, demo_spec, generate_bundle


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output", help="bundle directory to create")
    parser.add_argument("--mini", action="store_true", help="small 120-frame bundle")
    parser.add_argument("--frames", type=int, help="override frame count")
    parser.add_argument("--shots", type=int, help="override shot count")
    parser.add_argument("--seed", type=int, help="override RNG seed")
    args = parser.parse_args()

    spec = demo_spec() if args.mini else SynthSpec()
    if args.frames:
        spec.frame_count = args.frames
    if args.shots:
        spec.shot_count = args.shots
    if args.seed is not None:
        spec.seed = args.seed

    root = generate_bundle(Path(args.output), spec)
    print(f"wrote {spec.frame_count}-frame bundle ({spec.shot_count} shots) to {root}")
    print(f"next: framepick run --bundle {root}")


if __name__ == "__main__":
    main()
