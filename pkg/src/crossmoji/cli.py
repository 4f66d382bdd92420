"""Command-line entry point.

Either a stage subcommand or `--stage NAME` selects what runs; `all`
executes the full pipeline, skipping stages whose artifacts are already
complete for the same configuration.
"""

from __future__ import annotations

import argparse
import sys

from .pipeline import STAGES, ConfigError, Pipeline, PipelineStageError, load_config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crossmoji",
        description="Cross-cultural emoji semantics pipeline",
    )
    parser.add_argument("stage_command", nargs="?", choices=list(STAGES) + ["all"],
                        metavar="stage",
                        help="ingest | train | project | analyze | report | all")
    parser.add_argument("--config", required=True, help="path to the JSON run config")
    parser.add_argument("--stage", choices=list(STAGES) + ["all"], default=None,
                        help="alternative to the positional stage")
    parser.add_argument("--deterministic", action="store_true",
                        help="single-threaded seeded training, byte-reproducible outputs")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for parallel training mode")
    parser.add_argument("--out", default=None, help="override the config's output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.stage_command and args.stage and args.stage_command != args.stage:
        print(f"conflicting stages: {args.stage_command!r} vs --stage {args.stage!r}",
              file=sys.stderr)
        return 2
    stage = args.stage_command or args.stage or "all"
    try:
        config = load_config(args.config, out_dir=args.out,
                             deterministic=args.deterministic, threads=args.threads)
        manifest = Pipeline(config).run(stage)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PipelineStageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for name, info in manifest.stages.items():
        status = "skipped (cached)" if info.get("skipped") else f"{info['seconds']}s"
        print(f"  {name:8s} {status}")
    if manifest.warnings:
        print(f"{len(manifest.warnings)} warning(s); see manifest.json")
    print(f"outputs in {config.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
