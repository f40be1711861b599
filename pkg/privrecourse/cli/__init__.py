"""
Command-line entry point.

    privrecourse run --config exp.cfg
    privrecourse sweep --config exp.cfg --epsilons 0.5,1.0 [--jobs 4]
    privrecourse recourse --config exp.cfg --queries q.csv --output r.csv

Exit codes: 0 success, 2 config error, 3 pipeline error. Failures print a
JSON error record on stderr.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from ..config import load_config, parse_epsilons
from ..core import ExperimentRunner
from ..errors import ConfigError, PipelineError, PrivRecourseError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PIPELINE = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="privrecourse",
        description="Differentially private recourse and membership-inference experiments",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run one experiment")
    run.add_argument("--config", required=True, help="Path to key = value config file")

    sweep = commands.add_parser("sweep", help="Run a baseline plus one experiment per epsilon")
    sweep.add_argument("--config", required=True, help="Template config")
    sweep.add_argument("--epsilons", required=True, help="Comma-separated epsilon list, e.g. 0.5,1.0")
    sweep.add_argument("--jobs", type=int, default=1, help="Parallel worker processes")

    recourse = commands.add_parser("recourse", help="Recourse for negatively classified query rows")
    recourse.add_argument("--config", required=True, help="Config describing data and mechanism")
    recourse.add_argument("--queries", required=True, help="CSV of raw query rows")
    recourse.add_argument("--output", required=True, help="Output CSV path")
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _report(error: PrivRecourseError) -> None:
    print(json.dumps(error.to_record(), sort_keys=True), file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, dispatch the subcommand and map errors to exit codes."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)

    try:
        config = load_config(args.config)
        with ExperimentRunner() as runner:
            if args.command == "run":
                runner.run(config)
            elif args.command == "sweep":
                if args.jobs < 1:
                    raise ConfigError(f"--jobs must be positive, got {args.jobs}")
                runner.sweep(config, parse_epsilons(args.epsilons), jobs=args.jobs)
            else:
                count = runner.recourse(config, args.queries, args.output)
                logger.info("%d recourse rows written", count)
    except ConfigError as e:
        _report(e)
        return EXIT_CONFIG
    except PipelineError as e:
        _report(e)
        return EXIT_PIPELINE
    except PrivRecourseError as e:
        _report(PipelineError(str(e)))
        return EXIT_PIPELINE
    except OSError as e:
        _report(PipelineError(f"{type(e).__name__}: {e}"))
        return EXIT_PIPELINE
    return EXIT_OK
