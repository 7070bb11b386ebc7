import logging
import sys

from commands.analyze_command import add_series_arguments, build_cost_spectrum, config_values, resolve_timeline
from config.series_io import load_series, write_calibration
from config.settings import RunConfig, build_config

logger = logging.getLogger("tacts.calibrate")


def handle(args) -> int:
    """Print omega, lambda_x, lambda_t, lambda and ks per spectrum member"""
    cfg = build_config(RunConfig, **config_values(args))
    series = load_series(cfg.input)
    tl = resolve_timeline(cfg.timeline, series)
    spectrum, _ = build_cost_spectrum(cfg, series, tl)
    write_calibration(spectrum, sys.stdout)
    if spectrum.failures:
        logger.warning(f"{len(spectrum.failures)} omega values could not be calibrated")
    return 0


def register(subparsers):
    parser = subparsers.add_parser("calibrate", help="calibrate lambda_x, lambda_t and lambda per omega without RQA")
    add_series_arguments(parser)
    parser.add_argument("--out-dir", help="where to write error.json on failure")
    parser.set_defaults(handler=handle)
