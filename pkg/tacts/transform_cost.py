"""Segment transformation costs and calibration of their unit prices.

Transforming segment S_a into S_b may shift/scale a point of S_a onto a point
of S_b (cost d = lambda_t*|dt| + lambda_x*|dX|) or ignore a point on either side
(cost lambda). The segment cost is the cheapest such transformation divided
by the number of points involved, so it never exceeds lambda.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import stats
from scipy.optimize import linear_sum_assignment

from tacts.errors import (
    AllGapsError,
    ConfigError,
    DegenerateAmplitudeError,
    DegenerateDistributionError,
    GapError,
    NonFiniteError,
    OptimizationError,
    SegmentTooSmallError,
    SizeLimitError,
)
from tacts.timeseries import (
    IrregularSeries,
    RegularTimeline,
    Segment,
    SegmentPairs,
    collect_segment_pairs,
    segment_bounds,
)

logger = logging.getLogger("tacts.transform_cost")

BRUTE_FORCE_LIMIT = 6
DEFAULT_GRID_SIZE = 60


@dataclass(frozen=True)
class CostParams:
    lam: float
    lambda_t: float
    lambda_x: float
    omega: float

    def __post_init__(self):
        if not np.isfinite(self.lam) or self.lam <= 0:
            raise ConfigError(f"ignore cost must be positive and finite, got {self.lam}")
        for name in ("lambda_t", "lambda_x"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be finite and non-negative, got {value}")
        if not np.isfinite(self.omega) or self.omega <= 0:
            raise ConfigError(f"segment width must be positive, got {self.omega}")

    def with_lambda(self, lam: float) -> "CostParams":
        return CostParams(lam, self.lambda_t, self.lambda_x, self.omega)


@dataclass(frozen=True)
class Matching:
    """Pairs (index in S_a, index in S_b); unmatched points are ignored"""

    pairs: Tuple[Tuple[int, int], ...] = ()

    def __post_init__(self):
        left = [a for a, _ in self.pairs]
        right = [b for _, b in self.pairs]
        if len(set(left)) != len(left) or len(set(right)) != len(right):
            raise ValueError("a matching must use every point at most once")

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True)
class SegmentCostResult:
    cost: float
    matching: Matching = field(default_factory=Matching)

    @property
    def matched_count(self) -> int:
        return len(self.matching)


def point_cost(alpha: Tuple[float, float], beta: Tuple[float, float], params: CostParams) -> float:
    """Cost of shifting/scaling point alpha onto point beta"""
    return params.lambda_t * abs(alpha[0] - beta[0]) + params.lambda_x * abs(alpha[1] - beta[1])


def _pair_costs(sa: Segment, sb: Segment, params: CostParams) -> np.ndarray:
    return (
        params.lambda_t * np.abs(sa.rel_times[:, None] - sb.rel_times[None, :])
        + params.lambda_x * np.abs(sa.amplitudes[:, None] - sb.amplitudes[None, :])
    )


def _check_segments(sa: Segment, sb: Segment):
    if sa.is_empty and sb.is_empty:
        raise GapError("both segments are empty")
    for seg in (sa, sb):
        if not (np.all(np.isfinite(seg.rel_times)) and np.all(np.isfinite(seg.amplitudes))):
            raise NonFiniteError("segment contains non-finite values")


def _normalized(total: float, n: int, m: int) -> float:
    return float(total / (n + m))


def segment_cost(sa: Segment, sb: Segment, params: CostParams) -> SegmentCostResult:
    """Exact minimum transformation cost over all partial bijections.

    Solved as a square assignment of size n+m: rows are the points of S_a plus
    one "ignore" slot per point of S_b, columns the points of S_b plus one
    "ignore" slot per point of S_a. Pair costs are capped at 2*lambda since
    a pair dearer than that is never better than ignoring both points.
    """
    _check_segments(sa, sb)
    n, m = len(sa), len(sb)
    lam = params.lam
    if n == 0 or m == 0:
        return SegmentCostResult(lam)

    d = _pair_costs(sa, sb, params)
    size = n + m
    cost = np.full((size, size), np.inf)
    cost[:n, :m] = np.minimum(d, 2.0 * lam)
    cost[:n, m:][np.diag_indices(n)] = lam
    cost[n:, :m][np.diag_indices(m)] = lam
    cost[n:, m:] = 0.0

    rows, cols = linear_sum_assignment(cost)
    pairs = []
    for r, c in zip(rows, cols):
        if r < n and c < m and d[r, c] < 2.0 * lam:
            pairs.append((int(r), int(c)))
    return _result_from_pairs(pairs, d, n, m, lam)


def _result_from_pairs(pairs, d: np.ndarray, n: int, m: int, lam: float) -> SegmentCostResult:
    matched = sum(d[a, b] for a, b in pairs)
    unmatched = n + m - 2 * len(pairs)
    return SegmentCostResult(_normalized(lam * unmatched + matched, n, m), Matching(tuple(sorted(pairs))))


def brute_force_segment_cost(sa: Segment, sb: Segment, params: CostParams) -> SegmentCostResult:
    """Reference solver enumerating every partial bijection (small segments only)"""
    _check_segments(sa, sb)
    n, m = len(sa), len(sb)
    if n > BRUTE_FORCE_LIMIT or m > BRUTE_FORCE_LIMIT:
        raise SizeLimitError(
            f"brute force is limited to {BRUTE_FORCE_LIMIT} points per segment, got {n} and {m}"
        )
    lam = params.lam
    d = _pair_costs(sa, sb, params) if n and m else np.zeros((n, m))
    best_total = lam * (n + m)
    best_pairs = ()
    for k in range(1, min(n, m) + 1):
        for left in itertools.combinations(range(n), k):
            for right in itertools.permutations(range(m), k):
                total = lam * (n + m - 2 * k) + sum(d[a, b] for a, b in zip(left, right))
                if total < best_total:
                    best_total = total
                    best_pairs = tuple(zip(left, right))
    return _result_from_pairs(best_pairs, d, n, m, lam)


def ordered_segment_cost(sa: Segment, sb: Segment, params: CostParams) -> SegmentCostResult:
    """Order-preserving edit distance between the segments.

    Only matchings that keep the time order of both segments are considered,
    so the result is an upper bound of segment_cost (e.g. crossing optima are
    missed). Offered as a faster approximation.
    """
    _check_segments(sa, sb)
    n, m = len(sa), len(sb)
    lam = params.lam
    if n == 0 or m == 0:
        return SegmentCostResult(lam)
    d = _pair_costs(sa, sb, params)
    scr = np.zeros((n + 1, m + 1))
    scr[:, 0] = lam * np.arange(n + 1)
    scr[0, :] = lam * np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            scr[i, j] = min(
                scr[i - 1, j] + lam,
                scr[i, j - 1] + lam,
                scr[i - 1, j - 1] + d[i - 1, j - 1],
            )
    pairs = []
    i, j = n, m
    while i > 0 and j > 0:
        if scr[i, j] == scr[i - 1, j - 1] + d[i - 1, j - 1]:
            pairs.append((i - 1, j - 1))
            i, j = i - 1, j - 1
        elif scr[i, j] == scr[i - 1, j] + lam:
            i -= 1
        else:
            j -= 1
    return SegmentCostResult(_normalized(scr[n, m], n, m), Matching(tuple(sorted(pairs))))


def calibrate_lambda_x(series: IrregularSeries, tl: RegularTimeline, omega: float) -> float:
    """Reciprocal mean amplitude difference between adjacent non-empty segments"""
    if omega <= 0:
        raise ConfigError(f"segment width must be positive, got {omega}")
    a_lo, mid, b_hi = segment_bounds(series.times, tl.points(), omega)
    valid = (mid > a_lo) & (b_hi > mid)
    if not np.any(valid):
        raise AllGapsError(f"every timeline point has an empty segment for omega={omega}")
    # centering keeps the cumulative sums and the tolerance free of any offset
    centered = series.values - series.values.mean()
    csum = np.concatenate(([0.0], np.cumsum(centered)))
    a_lo, mid, b_hi = a_lo[valid], mid[valid], b_hi[valid]
    mean_a = (csum[mid] - csum[a_lo]) / (mid - a_lo)
    mean_b = (csum[b_hi] - csum[mid]) / (b_hi - mid)
    expected = np.mean(np.abs(mean_a - mean_b))
    # cumulative sums leave rounding residue on constant series
    scale = np.max(np.abs(centered))
    if expected <= scale * 1e-12 * len(series):
        raise DegenerateAmplitudeError("mean amplitude difference between segments is zero")
    return float(1.0 / expected)


def calibrate_lambda_t(series: IrregularSeries, omega: float) -> float:
    """Reciprocal mean of the consecutive time differences shorter than omega"""
    diffs = np.diff(series.times)
    inside = diffs[diffs < omega]
    if inside.size == 0:
        raise SegmentTooSmallError(f"no sampling interval is shorter than omega={omega}")
    return float(1.0 / inside.mean())


def ks_distance_to_gaussian(samples: Sequence[float]) -> float:
    """KS distance between the samples and a moment-fitted Gaussian"""
    arr = np.asarray(samples, dtype=float)
    if arr.size < 2:
        raise DegenerateDistributionError("KS distance needs at least 2 samples")
    sigma = arr.std()
    if not sigma > 0:
        raise DegenerateDistributionError("samples have zero variance")
    return float(stats.kstest(arr, "norm", args=(arr.mean(), sigma)).statistic)


def _solver(ordered: bool):
    return ordered_segment_cost if ordered else segment_cost


def cost_series_for_lambda(pairs: SegmentPairs, params: CostParams, ordered: bool = False, subset=None) -> np.ndarray:
    """Costs of the non-gap timeline points (in timeline order) for one parameter set"""
    solve = _solver(ordered)
    chosen = pairs.pairs if subset is None else [pairs.pairs[i] for i in subset]
    return np.array([solve(sa, sb, params).cost for sa, sb in chosen], dtype=float)


def default_lambda_grid(pairs: SegmentPairs, lambda_t: float, lambda_x: float, size: int = DEFAULT_GRID_SIZE) -> np.ndarray:
    """Linear grid from 0.05 to 6 times the mean nearest-in-time pair cost"""
    if size < 1:
        raise ConfigError(f"lambda grid needs at least one candidate, got {size}")
    costs = []
    for sa, sb in pairs.pairs:
        nearest = np.abs(sa.rel_times[:, None] - sb.rel_times[None, :]).argmin(axis=1)
        costs.append(
            lambda_t * np.abs(sa.rel_times - sb.rel_times[nearest])
            + lambda_x * np.abs(sa.amplitudes - sb.amplitudes[nearest])
        )
    mean_cost = float(np.mean(np.concatenate(costs))) if costs else 0.0
    if not mean_cost > 0:
        logger.warning(f"Mean nearest pair cost is zero for omega={pairs.omega}; using unit scale")
        mean_cost = 1.0
    if size == 1:
        return np.array([mean_cost])
    return np.linspace(0.05 * mean_cost, 6.0 * mean_cost, size)


def fit_subset(n_valid: int, fit_points: Optional[int]):
    """Evenly strided subset of non-gap indices used to score lambda candidates"""
    if fit_points is None or fit_points >= n_valid:
        return None
    if fit_points < 2:
        raise ConfigError(f"lambda fitting needs at least 2 points, got {fit_points}")
    return np.unique(np.linspace(0, n_valid - 1, fit_points).round().astype(int))


def optimize_lambda_over_pairs(
    pairs: SegmentPairs,
    lambda_t: float,
    lambda_x: float,
    grid: Sequence[float],
    ordered: bool = False,
    fit_points: Optional[int] = None,
) -> Tuple[float, float]:
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ConfigError("lambda grid is empty")
    if np.any(~np.isfinite(grid)) or np.any(grid <= 0):
        raise ConfigError("lambda candidates must be positive and finite")
    if pairs.n_valid == 0:
        raise AllGapsError(f"every timeline point has an empty segment for omega={pairs.omega}")

    subset = fit_subset(pairs.n_valid, fit_points)
    base = CostParams(float(grid[0]), lambda_t, lambda_x, pairs.omega)
    scored = []
    for lam in grid:
        costs = cost_series_for_lambda(pairs, base.with_lambda(float(lam)), ordered, subset)
        try:
            ks = ks_distance_to_gaussian(costs)
        except DegenerateDistributionError:
            logger.debug(f"omega={pairs.omega} lambda={lam:.6g}: degenerate cost distribution")
            continue
        logger.debug(f"omega={pairs.omega} lambda={lam:.6g}: KS={ks:.6f}")
        scored.append((ks, float(lam)))
    if not scored:
        raise OptimizationError(f"every lambda candidate is degenerate for omega={pairs.omega}")
    ks_best, lam_best = min(scored)
    return lam_best, ks_best


def optimize_lambda(
    series: IrregularSeries,
    tl: RegularTimeline,
    omega: float,
    grid: Optional[Sequence[float]] = None,
    ordered: bool = False,
    fit_points: Optional[int] = None,
) -> Tuple[float, float]:
    """Grid lambda whose cost series is closest to Gaussian in KS distance.

    Ties go to the smaller lambda. Returns (lambda, KS distance).
    """
    lambda_t = calibrate_lambda_t(series, omega)
    lambda_x = calibrate_lambda_x(series, tl, omega)
    pairs = collect_segment_pairs(series, tl, omega)
    if grid is None:
        grid = default_lambda_grid(pairs, lambda_t, lambda_x)
    return optimize_lambda_over_pairs(pairs, lambda_t, lambda_x, grid, ordered, fit_points)
