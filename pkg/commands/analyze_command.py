import logging
import math
import os
import traceback
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

import tacts
from commands import drop_unset, parse_bool, parse_list, parse_quantiles, parse_units
from config.series_io import load_series, omega_label, write_det, write_manifest, write_sdet, write_spectrum
from config.settings import OmegaPolicy, RunConfig, TimelineConfig, build_config
from tacts.errors import ConfigError, EmptyDetError, TactsError
from tacts.recurrence import FLAG_HIGH, FLAG_LOW, bootstrap_band, det_series, sdet
from tacts.spectrum import OmegaGrid, Spectrum, build_spectrum, choose_omega_grid
from tacts.timeseries import IrregularSeries, RegularTimeline, SamplingStats, default_timeline, sampling_stats

logger = logging.getLogger("tacts.analyze")

# runtime settings, not echoed into the manifest
RUNTIME_ONLY = ("workers", "out_dir", "keep_partial")


def resolve_timeline(cfg: TimelineConfig, series: IrregularSeries) -> RegularTimeline:
    if cfg.count is None:
        return default_timeline(series, cfg.step, cfg.t0)
    t0 = math.ceil(series.span[0] / cfg.step) * cfg.step if cfg.t0 is None else cfg.t0
    return RegularTimeline(t0, cfg.step, cfg.count)


def resolve_rec_timeline(cfg: RunConfig, tl: RegularTimeline) -> RegularTimeline:
    """Recurrence timeline with step rec_step covering the TACTS timeline"""
    t0 = tl.t0 if cfg.rec_t0 is None else cfg.rec_t0
    if cfg.rec_count is not None:
        return RegularTimeline(t0, cfg.rec_step, cfg.rec_count)
    if t0 > tl.end:
        raise ConfigError(f"recurrence timeline start {t0} lies after the TACTS timeline end {tl.end}")
    return RegularTimeline(t0, cfg.rec_step, int(math.floor((tl.end - t0) / cfg.rec_step + 1e-9)) + 1)


def resolve_omegas(cfg: RunConfig, stats: SamplingStats) -> Tuple[List[float], Optional[OmegaGrid]]:
    if cfg.omega_list is not None:
        return list(cfg.omega_list), None
    policy = cfg.omega_policy or OmegaPolicy()
    grid = choose_omega_grid(stats, policy.units_min, policy.units_max, policy.units_step)
    return list(grid.omegas), grid


def build_cost_spectrum(cfg: RunConfig, series: IrregularSeries, tl: RegularTimeline) -> Tuple[Spectrum, Optional[OmegaGrid]]:
    omegas, grid = resolve_omegas(cfg, sampling_stats(series))
    if grid is not None:
        logger.info(
            f"Omega grid: {len(grid)} widths, minP={grid.min_period:.4g} maxP={grid.max_period:.4g}"
        )
    spectrum = build_spectrum(
        series, tl, omegas, cfg.workers, cfg.lambda_grid_size, cfg.lambda_fit_points, cfg.dp_approx
    )
    return spectrum, grid


@dataclass
class RunManifest:
    """Everything needed to reproduce a run from its input file"""

    config: dict
    timeline: RegularTimeline
    rec_timeline: RegularTimeline
    stats: SamplingStats
    spectrum: Spectrum
    omega_grid: Optional[OmegaGrid]
    det_valid: dict
    sdet_valid: int
    flag_counts: dict
    seed: int
    version: str = tacts.__version__
    files: List[str] = field(default_factory=list)

    @property
    def n_rho(self) -> int:
        return self.rec_timeline.count

    def entries(self) -> List[Tuple[str, object]]:
        items = [("version", self.version)]
        items += _flatten("config", self.config)
        for name, tl in (("timeline", self.timeline), ("recurrence", self.rec_timeline)):
            items += [(f"{name}.t0", tl.t0), (f"{name}.step", tl.step), (f"{name}.count", tl.count)]
        items += [
            ("sampling.mean_dt", self.stats.mean_dt),
            ("sampling.std_dt", self.stats.std_dt),
            ("sampling.count", self.stats.count),
            ("omega.count", self.spectrum.k),
        ]
        if self.omega_grid is not None:
            items += [("omega.min_period", self.omega_grid.min_period), ("omega.max_period", self.omega_grid.max_period)]
        for member in self.spectrum.members:
            key = f"member.{omega_label(member.omega)}"
            p = member.params
            items += [
                (f"{key}.omega", member.omega),
                (f"{key}.lambda", p.lam),
                (f"{key}.lambda_x", p.lambda_x),
                (f"{key}.lambda_t", p.lambda_t),
                (f"{key}.ks", "nan" if member.ks_stat is None else member.ks_stat),
                (f"{key}.gaps", member.gap_runs),
                (f"{key}.gap_points", int(member.gap_mask.sum())),
                (f"{key}.det_valid", self.det_valid.get(member.omega, 0)),
            ]
        for omega, message in sorted(self.spectrum.failures.items()):
            items.append((f"dropped.{omega_label(omega)}", message))
        items += [
            ("n_rho", self.n_rho),
            ("n_rho_valid", self.sdet_valid),
            ("seed.bootstrap", self.seed),
            ("significance.high", self.flag_counts.get(FLAG_HIGH, 0)),
            ("significance.low", self.flag_counts.get(FLAG_LOW, 0)),
        ]
        return items


def _flatten(prefix: str, value) -> List[Tuple[str, object]]:
    if isinstance(value, dict):
        items = []
        for key in value:
            items += _flatten(f"{prefix}.{key}", value[key])
        return items
    return [(prefix, "none" if value is None else value)]


def run_analysis(cfg: RunConfig) -> RunManifest:
    """Load, build the spectrum, windowed DET per omega, SDET with its band.

    Tables are written as each stage finishes; on failure they are removed
    again unless keep_partial is set.
    """
    os.makedirs(cfg.out_dir, exist_ok=True)
    written = []
    try:
        series = load_series(cfg.input)
        tl = resolve_timeline(cfg.timeline, series)
        rec_tl = resolve_rec_timeline(cfg, tl)
        logger.info(f"TACTS timeline {tl.t0:g}+{tl.step:g}x{tl.count}, recurrence timeline {rec_tl.t0:g}+{rec_tl.step:g}x{rec_tl.count}")

        spectrum, grid = build_cost_spectrum(cfg, series, tl)
        written.append(write_spectrum(spectrum, cfg.out_dir))

        dets = []
        for member in spectrum.members:
            try:
                dets.append(det_series(
                    member, rec_tl, cfg.frame_L, cfg.eps_fraction, cfg.l_min, cfg.include_loi, cfg.min_window_points
                ))
            except EmptyDetError as e:
                logger.warning(f"No DET for omega={member.omega:.6g}: {e}")
        if not dets:
            raise EmptyDetError(f"no spectrum member has a valid recurrence window (L={cfg.frame_L})")
        written.append(write_det(dets, cfg.out_dir))

        spectrum_det = sdet(dets)
        ci_low, ci_high = bootstrap_band(dets, cfg.n_surrogates, cfg.quantiles, cfg.seed)
        spectrum_det = spectrum_det.with_band(ci_low, ci_high)
        written.append(write_sdet(spectrum_det, cfg.out_dir))

        flags, counts = np.unique(spectrum_det.flags.astype(str), return_counts=True)
        manifest = RunManifest(
            config=cfg.model_dump(exclude=set(RUNTIME_ONLY)),
            timeline=tl,
            rec_timeline=rec_tl,
            stats=sampling_stats(series),
            spectrum=spectrum,
            omega_grid=grid,
            det_valid={d.omega: d.n_valid for d in dets},
            sdet_valid=int(spectrum_det.valid_mask.sum()),
            flag_counts={str(f): int(c) for f, c in zip(flags, counts)},
            seed=cfg.seed,
        )
        written.append(write_manifest(manifest.entries(), cfg.out_dir))
        manifest.files = written
        logger.info(
            f"Analysis done: {spectrum.k} members, {manifest.sdet_valid}/{rec_tl.count} SDET points, "
            f"{manifest.flag_counts.get(FLAG_HIGH, 0)} high / {manifest.flag_counts.get(FLAG_LOW, 0)} low"
        )
        return manifest
    except TactsError:
        if not cfg.keep_partial:
            for path in written:
                try:
                    os.remove(path)
                except OSError as e:
                    logger.error(f"Could not remove partial output {path}: {str(e)}\n{traceback.format_exc()}")
        raise


def add_series_arguments(parser):
    parser.add_argument("--input", required=True, help="two-column (time, value) text file")
    parser.add_argument("--t0", type=float, help="TACTS timeline start")
    parser.add_argument("--dt", type=float, help="TACTS timeline step (default 1)")
    parser.add_argument("--count", type=int, help="TACTS timeline length")
    group = parser.add_mutually_exclusive_group()
    group.add_argument("--omega-units", type=parse_units, metavar="MIN:MAX:STEP",
                       help="omega grid in multiples of the mean sampling step")
    group.add_argument("--omega-list", type=parse_list, metavar="W1,W2,...", help="explicit omega values")
    parser.add_argument("--lambda-grid-size", type=int)
    parser.add_argument("--fit-points", type=int, dest="lambda_fit_points",
                        help="score lambda candidates on a stride subsample of this many points")
    parser.add_argument("--dp-approx", type=parse_bool, metavar="BOOL",
                        help="order-preserving approximation instead of the exact assignment")
    parser.add_argument("--workers", type=int)


def config_values(args) -> dict:
    timeline = drop_unset({"t0": args.t0, "step": args.dt, "count": args.count})
    values = {
        "input": args.input,
        "timeline": timeline,
        "omega_list": list(args.omega_list) if args.omega_list else None,
        "lambda_grid_size": args.lambda_grid_size,
        "lambda_fit_points": args.lambda_fit_points,
        "dp_approx": args.dp_approx,
        "workers": args.workers,
    }
    if args.omega_units:
        lo, hi, step = args.omega_units
        values["omega_policy"] = {"units_min": lo, "units_max": hi, "units_step": step}
    return drop_unset(values)


def handle(args) -> int:
    values = config_values(args)
    values.update(drop_unset({
        "frame_L": args.frame_L,
        "rec_step": args.rec_step,
        "rec_t0": args.rec_t0,
        "rec_count": args.rec_count,
        "eps_fraction": args.eps_frac,
        "l_min": args.lmin,
        "min_window_points": args.min_window_points,
        "n_surrogates": args.surrogates,
        "quantiles": args.quantiles,
        "seed": args.seed,
        "out_dir": args.out_dir,
        "include_loi": args.include_loi,
        "keep_partial": args.keep_partial or None,
    }))
    cfg = build_config(RunConfig, **values)
    run_analysis(cfg)
    return 0


def register(subparsers):
    parser = subparsers.add_parser("analyze", help="TACTS spectrum, windowed DET, SDET and significance band")
    add_series_arguments(parser)
    parser.add_argument("--frame-L", type=float, dest="frame_L", help="recurrence frame length")
    parser.add_argument("--rec-step", type=float, help="recurrence timeline step")
    parser.add_argument("--rec-t0", type=float)
    parser.add_argument("--rec-count", type=int)
    parser.add_argument("--eps-frac", type=float, help="recurrence threshold as a fraction of sigma (default 0.1)")
    parser.add_argument("--lmin", type=int, help="minimum diagonal line length (default 2)")
    parser.add_argument("--min-window-points", type=int)
    parser.add_argument("--surrogates", type=int, help="bootstrap surrogates (default 1000)")
    parser.add_argument("--quantiles", type=parse_quantiles, metavar="LO:HI", help="band quantiles (default 0.01:0.99)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out-dir")
    parser.add_argument("--include-loi", type=parse_bool, metavar="BOOL", help="count the line of identity (default true)")
    parser.add_argument("--keep-partial", action="store_true", help="keep tables already written when a later stage fails")
    parser.set_defaults(handler=handle)
