import argparse
import logging
import sys
import traceback

from config.series_io import write_error
from config.settings import DEFAULT_OUT_DIR, TACTS_ENV, configure_logging
from commands import analyze_command, bench_command, calibrate_command
from tacts.errors import TactsError

logger = logging.getLogger("tacts")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tacts",
        description="Transformation-cost spectra of irregular time series and recurrence-based regime detection",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    analyze_command.register(subparsers)
    bench_command.register(subparsers)
    calibrate_command.register(subparsers)
    return parser


def main(argv=None) -> int:
    configure_logging()
    args = build_parser().parse_args(argv)
    logger.debug(f"Environment: {TACTS_ENV}, command: {args.command}")
    out_dir = getattr(args, "out_dir", None)
    if out_dir is None and args.command != "calibrate":
        out_dir = DEFAULT_OUT_DIR
    try:
        return args.handler(args)
    except TactsError as e:
        logger.error(f"{type(e).__name__}: {e.message}\n{traceback.format_exc()}")
        if out_dir is not None:
            write_error(e, out_dir)
        return e.exit_code
    except Exception as e:
        logger.error(f"Unexpected error: {str(e)}\n{traceback.format_exc()}")
        if out_dir is not None:
            write_error(e, out_dir)
        return 1


if __name__ == "__main__":
    sys.exit(main())
