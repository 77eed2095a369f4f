"""Command line entry points: per-stage pipeline runs, bundle validation,
and the review service.

    framepick validate|downsample|group|crop|faces|score|propose|serve
              --bundle <dir> [--config <file>]
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .bundle import load_bundle
from .config import PipelineConfig
from .pipeline import STAGES, Pipeline, resolve_keywords

log = logging.getLogger(__name__)

_COMMAND_STAGE = {
    "downsample": "downsample",
    "group": "group",
    "crop": "crop",
    "faces": "faces",
    "score": "score",
    "propose": "propose",
}


def _load_config(path: str | None) -> PipelineConfig:
    if path:
        return PipelineConfig.from_file(path)
    return PipelineConfig()


def _add_common(parser: argparse.ArgumentParser, multi_bundle: bool = False):
    parser.add_argument(
        "--bundle",
        required=True,
        action="append" if multi_bundle else "store",
        help="dataset bundle directory" + (" (repeatable)" if multi_bundle else ""),
    )
    parser.add_argument("--config", help="pipeline config file (JSON)")


def cmd_validate(args) -> int:
    bundle = load_bundle(args.bundle)
    report = bundle.validate()
    for entry in report.entries:
        print(f"ERROR  [{entry.category}] {entry.item}: {entry.message}")
    for entry in report.warnings:
        print(f"warn   [{entry.category}] {entry.item}: {entry.message}")
    if report.usable:
        print(f"{bundle.manifest.video_id}: dataset usable "
              f"({len(bundle.frames)} frames, {len(bundle.artifacts.faces)} faces)")
        return 0
    print(f"{bundle.manifest.video_id}: dataset NOT usable "
          f"({len(report.entries)} errors)")
    return 1


def cmd_stage(args, target_stage: str) -> int:
    config = _load_config(args.config)
    bundle = load_bundle(args.bundle)
    pipeline = Pipeline(bundle, config)
    resolve_keywords(bundle, config)
    for stage in STAGES:
        digest = pipeline.stage_digest(stage)
        cached = pipeline.cache.has(stage, digest)
        pipeline.result(stage)  # computes or loads through the cache
        print(f"{stage:13s} {'cached' if cached else 'done':7s} {digest}")
        if stage == target_stage:
            break
    return 0


def cmd_run(args) -> int:
    config = _load_config(args.config)
    bundle = load_bundle(args.bundle)
    pipeline = Pipeline(bundle, config)
    run = pipeline.run(force=args.force)
    for status in run.stages:
        print(f"{status.name:13s} {status.status:7s} {status.seconds:8.3f}s {status.digest}")
    print(f"dataset: {run.dataset_path}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    static_dir = Path(args.static) if args.static else None
    app = create_app(args.bundle, static_dir=static_dir)
    port = args.port or int(os.environ.get("FRAMEPICK_PORT", "8350"))
    uvicorn.run(app, host=args.host, port=port, log_level="info")
    return 0


def cmd_init_config(args) -> int:
    PipelineConfig().write(args.output)
    print(f"wrote default config to {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="framepick",
        description="Thumbnail-candidate selection engine for long-form video",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="cross-check a dataset bundle")
    _add_common(p)

    for name in _COMMAND_STAGE:
        p = sub.add_parser(name, help=f"run the pipeline through the {name} stage")
        _add_common(p)

    p = sub.add_parser("run", help="run every pipeline stage")
    _add_common(p)
    p.add_argument("--force", action="store_true", help="ignore the stage cache")

    p = sub.add_parser("serve", help="start the review service")
    _add_common(p, multi_bundle=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=None,
                   help="port (default: $FRAMEPICK_PORT or 8350)")
    p.add_argument("--static", help="directory of UI assets to serve at /")

    p = sub.add_parser("init-config", help="write the default config file")
    p.add_argument("output", help="path for the JSON config")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        return cmd_validate(args)
    if args.command in _COMMAND_STAGE:
        return cmd_stage(args, _COMMAND_STAGE[args.command])
    if args.command == "run":
        return cmd_run(args)
    if args.command == "serve":
        return cmd_serve(args)
    if args.command == "init-config":
        return cmd_init_config(args)
    raise AssertionError(f"unhandled command {args.command}")


if __name__ == "__main__":
    sys.exit(main())
