import argparse
import logging
import sys
from typing import List, Optional

from config.settings import get_settings
from utils.artifacts import STAGES
from utils.error_handler import ExitCode, as_exit_code
from utils.logger import set_pipeline_level, setup_logger

# Configure logging
logger = setup_logger("main")


class UsageErrorParser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with the toolkit's usage code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(int(ExitCode.USAGE_ERROR), f"{self.prog}: error: {message}\n")


@as_exit_code
def run(args):
    """Dispatch a parsed command line"""
    if args.debug:
        set_pipeline_level(logging.DEBUG)
        logger.debug("Debug mode enabled")

    # Import here to keep --help fast
    from pipeline.commands import cmd_eval, cmd_synth, cmd_train
    from utils.config import load_pipeline_config

    config = load_pipeline_config(args.config, seed_override=args.seed)
    logger.info(f"Running '{args.command}' with seed {config.seed}")

    if args.command == "synth":
        cmd_synth(config, args.out, workers=args.workers)
    elif args.command == "train":
        cmd_train(config, args.manifest, args.stage, args.models, workers=args.workers)
    elif args.command == "eval":
        cmd_eval(config, args.manifest, args.models, args.out, workers=args.workers)


def parse_args(argv: Optional[List[str]] = None):
    """Parse command line arguments"""
    settings = get_settings()

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--config",
        type=str,
        default=settings.config_path,
        help="Path to the pipeline configuration file"
    )
    common.add_argument(
        "--manifest",
        type=str,
        help="Corpus manifest written by synth"
    )
    common.add_argument(
        "--models",
        type=str,
        default=settings.model_dir,
        help="Model artifact directory"
    )
    common.add_argument(
        "--seed",
        type=int,
        help="Seed overriding the configuration file"
    )
    common.add_argument(
        "--workers",
        type=int,
        default=settings.workers,
        help="Worker processes for synthesis and feature extraction"
    )
    common.add_argument(
        "--debug",
        action="store_true",
        help="Enable debug mode with verbose logging"
    )

    parser = UsageErrorParser(
        description="e-vector toolkit - virtual room synthesis, room verification and acoustic metadata estimation",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=UsageErrorParser)

    synth = subparsers.add_parser("synth", parents=[common], help="Synthesize the virtual-room corpus")
    synth.add_argument("--out", type=str, required=True, help="Corpus output directory")

    train = subparsers.add_parser("train", parents=[common], help="Train one pipeline stage")
    train.add_argument("stage", choices=STAGES, help="Stage to train")

    evaluate = subparsers.add_parser("eval", parents=[common], help="Run the evaluation experiments")
    evaluate.add_argument("--out", type=str, default=settings.report_dir, help="Report directory")

    args = parser.parse_args(argv)
    if args.workers < 1:
        parser.error("--workers must be at least 1")
    return args


def main(argv: Optional[List[str]] = None) -> int:
    """Command-line entry point; returns the process exit code"""
    args = parse_args(argv)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
