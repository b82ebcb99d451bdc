"""
Command-line entry point

    bec-interferometer run --config run.yaml [--output DIR] [--override KEY=VALUE ...] [--seedless]
    bec-interferometer resume --config run.yaml --checkpoint DIR/checkpoint.npz
    bec-interferometer estimate --config run.yaml
    bec-interferometer verify [--max-n 8]

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.
"""

import argparse
import sys
from typing import List, Optional

from app.cli import commands
from app.core.errors import AppError, handle_app_error, handle_unexpected_error
from app.core.logging import setup_logging


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bec-interferometer",
        description="Two-mode BEC interferometry: self-consistent mode and amplitude dynamics",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    def with_config(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--config", required=True, help="Run document (YAML)")
        sub.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="Patch a dotted key of the run document (repeatable)",
        )

    run = subparsers.add_parser("run", help="Evolve a run document and write its outputs")
    with_config(run)
    run.add_argument("--output", help="Output directory (default: <output_root>/<label>)")
    run.add_argument("--seedless", action="store_true", help="Assert that repeated steps are bit-identical")

    resume = subparsers.add_parser("resume", help="Continue a run from its checkpoint")
    with_config(resume)
    resume.add_argument("--checkpoint", required=True, help="Checkpoint archive (.npz)")
    resume.add_argument("--output", help="Output directory (default: the checkpoint's directory)")

    estimate = subparsers.add_parser("estimate", help="J/U, regime, validity and memory report")
    with_config(estimate)

    verify = subparsers.add_parser("verify", help="Check basis coefficients against the Fock oracle")
    verify.add_argument("--max-n", type=int, default=None, help="Largest even N to sweep")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging()
    try:
        if args.command == "run":
            return commands.run_command(args.config, args.output, args.override, args.seedless)
        if args.command == "resume":
            return commands.resume_command(args.config, args.checkpoint, args.output, args.override)
        if args.command == "estimate":
            return commands.estimate_command(args.config, args.override)
        return commands.verify_command(args.max_n)
    except AppError as exc:
        return handle_app_error(exc)
    except Exception as exc:
        return handle_unexpected_error(exc)


if __name__ == "__main__":
    sys.exit(main())
