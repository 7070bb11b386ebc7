"""TACTS cost series and the aligned spectrum over a grid of segment widths."""

import logging
import math
import traceback
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from tacts.errors import (
    ConfigError,
    DegenerateDistributionError,
    EmptySeriesError,
    SpectrumError,
    TactsError,
)
from tacts.parallel import map_ordered
from tacts.timeseries import (
    IrregularSeries,
    RegularSeries,
    RegularTimeline,
    SamplingStats,
    collect_segment_pairs,
    sampling_stats,
)
from tacts.transform_cost import (
    DEFAULT_GRID_SIZE,
    CostParams,
    calibrate_lambda_t,
    calibrate_lambda_x,
    cost_series_for_lambda,
    default_lambda_grid,
    ks_distance_to_gaussian,
    optimize_lambda_over_pairs,
)

logger = logging.getLogger("tacts.spectrum")

DEFAULT_UNITS_STEP = 0.5


def _gap_runs(gap_mask: np.ndarray) -> int:
    padded = np.concatenate(([False], gap_mask, [False])).astype(np.int8)
    return int(np.count_nonzero(np.diff(padded) == 1))


@dataclass(frozen=True, eq=False)
class CostSeries:
    """Transformation costs C(t) on a regular timeline.

    Gap-masked points (either segment empty) hold NaN and are excluded from
    every statistic.
    """

    timeline: RegularTimeline
    costs: np.ndarray
    gap_mask: np.ndarray
    params: CostParams
    ks_stat: Optional[float] = None

    @property
    def omega(self) -> float:
        return self.params.omega

    @property
    def n_valid(self) -> int:
        return int(np.count_nonzero(~self.gap_mask))

    @property
    def gap_runs(self) -> int:
        return _gap_runs(self.gap_mask)

    def regular(self) -> RegularSeries:
        return RegularSeries(self.timeline, self.costs, self.gap_mask)


def tacts_series(
    series: IrregularSeries,
    tl: RegularTimeline,
    omega: float,
    lambda_opt: Optional[float] = None,
    grid: Optional[Sequence[float]] = None,
    grid_size: int = DEFAULT_GRID_SIZE,
    fit_points: Optional[int] = None,
    ordered: bool = False,
) -> CostSeries:
    """Evaluate C(t) for one segment width.

    lambda_x and lambda_t are calibrated from the data; lambda is optimized
    over the grid unless lambda_opt fixes it.
    """
    pairs = collect_segment_pairs(series, tl, omega)
    if pairs.n_valid == 0:
        raise EmptySeriesError(f"every timeline point is a gap for omega={omega}")
    lambda_t = calibrate_lambda_t(series, omega)
    lambda_x = calibrate_lambda_x(series, tl, omega)

    if lambda_opt is None:
        if grid is None:
            grid = default_lambda_grid(pairs, lambda_t, lambda_x, grid_size)
        lam, ks = optimize_lambda_over_pairs(pairs, lambda_t, lambda_x, grid, ordered, fit_points)
    else:
        lam, ks = float(lambda_opt), None

    params = CostParams(lam, lambda_t, lambda_x, float(omega))
    valid_costs = cost_series_for_lambda(pairs, params, ordered)
    if ks is None or fit_points is not None:
        try:
            ks = ks_distance_to_gaussian(valid_costs)
        except DegenerateDistributionError:
            ks = None

    costs = np.full(tl.count, np.nan)
    costs[~pairs.gap_mask] = valid_costs
    costs.setflags(write=False)
    logger.info(
        f"omega={omega:.6g}: lambda={lam:.6g} lambda_x={lambda_x:.6g} "
        f"lambda_t={lambda_t:.6g} KS={'n/a' if ks is None else f'{ks:.4f}'} "
        f"gaps={int(pairs.gap_mask.sum())}/{tl.count}"
    )
    return CostSeries(tl, costs, pairs.gap_mask, params, ks)


@dataclass(frozen=True)
class OmegaGrid:
    """Segment widths expressed in multiples of the mean sampling step"""

    omegas: Tuple[float, ...]
    units: Tuple[float, ...]
    min_period: float
    max_period: float

    def __iter__(self):
        return iter(self.omegas)

    def __len__(self) -> int:
        return len(self.omegas)


def choose_omega_grid(
    stats: SamplingStats, n_min: float, n_max: float, step_in_units: float = DEFAULT_UNITS_STEP
) -> OmegaGrid:
    if not stats.mean_dt > 0:
        raise ConfigError(f"mean sampling step must be positive, got {stats.mean_dt}")
    if step_in_units <= 0:
        raise ConfigError(f"omega grid step must be positive, got {step_in_units}")
    if n_min <= 0 or n_max < n_min:
        raise ConfigError(f"invalid omega unit range {n_min}:{n_max}")
    n_steps = int(math.floor((n_max - n_min) / step_in_units + 1e-9))
    units = tuple(float(n_min + i * step_in_units) for i in range(n_steps + 1))
    omegas = tuple(u * stats.mean_dt for u in units)
    return OmegaGrid(omegas, units, n_min * stats.mean_dt, n_max * stats.mean_dt)


@dataclass(frozen=True, eq=False)
class Spectrum:
    members: Tuple[CostSeries, ...]
    omegas: Tuple[float, ...]
    stats: SamplingStats
    failures: Dict[float, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.members:
            raise SpectrumError("a spectrum needs at least one member", self.failures)
        timeline = self.members[0].timeline
        if any(m.timeline != timeline for m in self.members):
            raise ConfigError("spectrum members must share one timeline")
        if any(b <= a for a, b in zip(self.omegas, self.omegas[1:])):
            raise ConfigError("spectrum omegas must be strictly increasing")

    @property
    def timeline(self) -> RegularTimeline:
        return self.members[0].timeline

    @property
    def k(self) -> int:
        return len(self.members)

    def gap_counts(self) -> Dict[float, int]:
        return {m.omega: m.gap_runs for m in self.members}


def _member_job(job):
    series, tl, omega, grid_size, fit_points, ordered = job
    try:
        return tacts_series(series, tl, omega, grid_size=grid_size, fit_points=fit_points, ordered=ordered)
    except TactsError as e:
        logger.debug(f"omega={omega} failed: {e}\n{traceback.format_exc()}")
        return f"{type(e).__name__}: {e}"


def build_spectrum(
    series: IrregularSeries,
    tl: RegularTimeline,
    omega_grid: Sequence[float],
    workers: int = 1,
    grid_size: int = DEFAULT_GRID_SIZE,
    fit_points: Optional[int] = None,
    ordered: bool = False,
) -> Spectrum:
    """Independently calibrated TACTS series for every omega, on one timeline.

    Members that fail are dropped with a warning; only a spectrum with no
    surviving member is an error.
    """
    omegas = [float(w) for w in omega_grid]
    if not omegas:
        raise ConfigError("omega grid is empty")
    if any(b <= a for a, b in zip(omegas, omegas[1:])):
        raise ConfigError("omega grid must be strictly increasing")

    jobs = [(series, tl, w, grid_size, fit_points, ordered) for w in omegas]
    results = map_ordered(_member_job, jobs, workers)

    members, kept, failures = [], [], {}
    for omega, result in zip(omegas, results):
        if isinstance(result, CostSeries):
            members.append(result)
            kept.append(omega)
        else:
            logger.warning(f"Dropping spectrum member omega={omega:.6g}: {result}")
            failures[omega] = result
    if not members:
        raise SpectrumError(f"all {len(omegas)} spectrum members failed", failures)
    return Spectrum(tuple(members), tuple(kept), sampling_stats(series), failures)
