"""Command-line entry point: synth, run, and report subcommands.

Every subcommand resolves the same layered configuration (file, then
RISINGSTARS_* environment variables, then command-line flags) so a pipeline
is reproducible from its invocation alone. Errors print one line to stderr
and exit with status 1.
"""

from __future__ import annotations

import argparse
import sys

from .config import parse_config
from .pipeline import STAGES, PipelineError, build_report, run_pipeline, run_synth


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risingstars",
        description="rank young researchers by predicted citation growth",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", default=None, help="YAML config file")
        p.add_argument(
            "--seed", type=int, default=None, help="override every stage seed"
        )
        p.add_argument(
            "--workdir", default=None, help="override paths.workdir from the config"
        )

    p_synth = sub.add_parser(
        "synth", help="generate a synthetic corpus at paths.corpus"
    )
    common(p_synth)

    p_run = sub.add_parser("run", help="run pipeline stages into the workdir")
    common(p_run)
    p_run.add_argument(
        "--stages",
        default=None,
        help=f"comma-separated subset of: {','.join(STAGES)} (default: all)",
    )

    p_report = sub.add_parser(
        "report", help="consolidate workdir artifacts into report.txt/report.json"
    )
    common(p_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = parse_config(args.config, seed=args.seed, workdir=args.workdir)
        if args.command == "synth":
            path = run_synth(config)
            print(f"wrote {path}")
        elif args.command == "run":
            stages = None
            if args.stages is not None:
                stages = [s.strip() for s in args.stages.split(",") if s.strip()]
                if not stages:
                    raise PipelineError(
                        f"--stages is empty; valid stages are {', '.join(STAGES)}"
                    )
            ran = run_pipeline(config, stages)
            print("completed stages: " + ", ".join(ran))
        else:
            sys.stdout.write(build_report(config.paths.workdir))
    except (PipelineError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
