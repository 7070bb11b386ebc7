"""Recurrence plots, determinism and the sliding-window determinism spectrum.

Diagonal lines follow the usual RQA conventions: a line is a maximal run of
recurrences along one diagonal, isolated recurrences are lines of length 1,
and the line of identity (main diagonal) is counted unless excluded.
"""

import logging
from dataclasses import dataclass, replace
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from tacts.errors import (
    ConfigError,
    EmptyDetError,
    EmptySeriesError,
    TimelineMismatchError,
    UndefinedDeterminismError,
)
from tacts.spectrum import CostSeries
from tacts.timeseries import RegularSeries, RegularTimeline

logger = logging.getLogger("tacts.recurrence")

DEFAULT_EPS_FRACTION = 0.1
DEFAULT_L_MIN = 2
DEFAULT_MIN_WINDOW_POINTS = 10
DEFAULT_SURROGATES = 1000
DEFAULT_QUANTILES = (0.01, 0.99)

FLAG_HIGH = "high"
FLAG_LOW = "low"
FLAG_NONE = "none"


@dataclass(frozen=True, eq=False)
class RecurrenceMatrix:
    matrix: np.ndarray
    eps: float

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def recurrence_count(self) -> int:
        return int(np.count_nonzero(self.matrix))

    @property
    def recurrence_rate(self) -> float:
        return self.recurrence_count / float(self.size * self.size)


def recurrence_matrix(window: Sequence[float], eps: float) -> RecurrenceMatrix:
    """R_ij = 1 iff |x_i - x_j| <= eps"""
    x = np.asarray(window, dtype=float).ravel()
    if x.size < 2:
        raise ConfigError(f"recurrence window needs at least 2 points, got {x.size}")
    if not eps >= 0:
        raise ConfigError(f"recurrence threshold must be non-negative, got {eps}")
    matrix = np.abs(x[:, None] - x[None, :]) <= eps
    matrix.setflags(write=False)
    return RecurrenceMatrix(matrix, float(eps))


@dataclass(frozen=True)
class DiagonalHistogram:
    """Number of maximal diagonal lines of each length"""

    counts: Dict[int, int]

    @property
    def total_points(self) -> int:
        return sum(length * n for length, n in self.counts.items())

    def as_array(self, max_length: int = None) -> np.ndarray:
        """Counts indexed by line length (index 0 unused)"""
        top = max(self.counts, default=0) if max_length is None else max_length
        arr = np.zeros(top + 1, dtype=np.int64)
        for length, n in self.counts.items():
            arr[length] = n
        return arr


def diagonal_histogram(rm: RecurrenceMatrix, include_loi: bool = True) -> DiagonalHistogram:
    """Histogram of maximal runs of recurrences along every diagonal"""
    n = rm.size
    recurrences = rm.matrix.astype(np.int8)
    if not include_loi:
        np.fill_diagonal(recurrences, 0)
    # shear so that diagonal k becomes column k + n - 1
    sheared = np.zeros((n, 2 * n - 1), dtype=np.int8)
    rows, cols = np.indices((n, n))
    sheared[rows, cols - rows + n - 1] = recurrences
    edges = np.diff(np.pad(sheared, ((1, 1), (0, 0))), axis=0).T
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    lengths = np.bincount(ends - starts)
    return DiagonalHistogram({int(l): int(c) for l, c in enumerate(lengths) if l > 0 and c > 0})


def determinism(hist: DiagonalHistogram, l_min: int = DEFAULT_L_MIN) -> float:
    """Fraction of recurrence points on lines of length >= l_min"""
    total = hist.total_points
    if total == 0:
        raise UndefinedDeterminismError("no recurrence points")
    on_lines = sum(length * n for length, n in hist.counts.items() if length >= l_min)
    return on_lines / float(total)


@dataclass(frozen=True, eq=False)
class DetSeries:
    """Windowed determinism on a recurrence timeline.

    Windows that touch a gap or hold fewer than the minimum number of points
    are invalid and hold NaN.
    """

    rec_timeline: RegularTimeline
    values: np.ndarray
    valid_mask: np.ndarray
    frame: float
    eps_fraction: float
    eps: float
    l_min: int
    include_loi: bool
    histograms: Tuple[Optional[DiagonalHistogram], ...]
    window_counts: np.ndarray
    omega: Optional[float] = None

    @property
    def n_valid(self) -> int:
        return int(np.count_nonzero(self.valid_mask))


def det_series(
    cs: Union[CostSeries, RegularSeries],
    rec_tl: RegularTimeline,
    frame_L: float,
    eps_fraction: float = DEFAULT_EPS_FRACTION,
    l_min: int = DEFAULT_L_MIN,
    include_loi: bool = True,
    min_points: int = DEFAULT_MIN_WINDOW_POINTS,
) -> DetSeries:
    """DET of the points with time in (t - L/2, t + L/2) for every t in rec_tl.

    The threshold is eps_fraction times the standard deviation of the whole
    non-gap series, so all windows share one eps.
    """
    omega = cs.omega if isinstance(cs, CostSeries) else None
    series = cs.regular() if isinstance(cs, CostSeries) else cs
    if frame_L <= rec_tl.step:
        raise ConfigError(f"recurrence frame {frame_L} must exceed the recurrence step {rec_tl.step}")
    if eps_fraction < 0:
        raise ConfigError(f"eps fraction must be non-negative, got {eps_fraction}")
    if l_min < 1:
        raise ConfigError(f"l_min must be at least 1, got {l_min}")
    filled = series.filled()
    if filled.size == 0:
        raise EmptySeriesError("series has no non-gap points")
    eps = eps_fraction * float(filled.std())

    times = series.timeline.points()
    gap_prefix = np.concatenate(([0], np.cumsum(series.gap_mask)))
    centers = rec_tl.points()
    lo = np.searchsorted(times, centers - frame_L / 2.0, side="right")
    hi = np.searchsorted(times, centers + frame_L / 2.0, side="left")

    values = np.full(rec_tl.count, np.nan)
    histograms = []
    for i in range(rec_tl.count):
        window_ok = hi[i] - lo[i] >= max(min_points, 2) and gap_prefix[hi[i]] == gap_prefix[lo[i]]
        if not window_ok:
            histograms.append(None)
            continue
        hist = diagonal_histogram(recurrence_matrix(series.values[lo[i]:hi[i]], eps), include_loi)
        try:
            values[i] = determinism(hist, l_min)
        except UndefinedDeterminismError:
            histograms.append(None)
            continue
        histograms.append(hist)

    valid = ~np.isnan(values)
    if not np.any(valid):
        raise EmptyDetError(f"no valid recurrence window (frame {frame_L})")
    values.setflags(write=False)
    valid.setflags(write=False)
    logger.debug(f"DET series omega={omega}: {int(valid.sum())}/{rec_tl.count} valid windows")
    return DetSeries(
        rec_tl, values, valid, float(frame_L), float(eps_fraction), eps, int(l_min),
        include_loi, tuple(histograms), hi - lo, omega,
    )


@dataclass(frozen=True, eq=False)
class SDetSeries:
    """Spectrum determinism: the mean of the member DET values valid at each t"""

    rec_timeline: RegularTimeline
    values: np.ndarray
    member_count: np.ndarray
    ci_low: Optional[np.ndarray] = None
    ci_high: Optional[np.ndarray] = None
    flags: Optional[np.ndarray] = None

    @property
    def valid_mask(self) -> np.ndarray:
        return self.member_count > 0

    def with_band(self, ci_low: np.ndarray, ci_high: np.ndarray) -> "SDetSeries":
        banded = replace(self, ci_low=np.asarray(ci_low, dtype=float), ci_high=np.asarray(ci_high, dtype=float))
        return replace(banded, flags=significance_flags(banded))


def sdet(members: Sequence[DetSeries], centered: bool = False) -> SDetSeries:
    """Mean of the member DET values valid at each t.

    With centered=True every member is shifted by its own mean first, so a
    member dropping out near a gap does not move the level of the average.
    On a stretch where the member set is fixed this only subtracts a constant.
    """
    if not members:
        raise ConfigError("SDET needs at least one DET series")
    timeline = members[0].rec_timeline
    if any(m.rec_timeline != timeline for m in members):
        raise TimelineMismatchError("DET series do not share a recurrence timeline")
    valid = np.vstack([m.valid_mask for m in members])
    member_values = np.vstack([m.values for m in members])
    if centered:
        member_values = member_values - np.array([m.values[m.valid_mask].mean() for m in members])[:, None]
    stacked = np.where(valid, member_values, 0.0)
    counts = valid.sum(axis=0)
    values = np.full(timeline.count, np.nan)
    np.divide(stacked.sum(axis=0), counts, out=values, where=counts > 0)
    return SDetSeries(timeline, values, counts)


def _member_band(det: DetSeries, n_surrogates: int, quantiles: Tuple[float, float], rng: np.random.Generator):
    hists = [h for h in det.histograms if h is not None]
    top = max(max(h.counts) for h in hists)
    counts = np.vstack([h.as_array(top) for h in hists]).astype(float)
    n_lines = counts.sum(axis=1)
    probabilities = (counts / n_lines[:, None]).mean(axis=0)
    probabilities /= probabilities.sum()
    n_draw = max(int(round(n_lines.mean())), 1)

    lengths = np.arange(top + 1)
    if np.count_nonzero(probabilities) == 1:
        logger.warning(f"Collapsed bootstrap band for omega={det.omega}: single line length")
    draws = rng.choice(lengths, size=(n_surrogates, n_draw), p=probabilities)
    on_lines = np.where(draws >= det.l_min, draws, 0).sum(axis=1)
    surrogates = on_lines / draws.sum(axis=1)
    low, high = np.quantile(surrogates, quantiles)
    return float(low), float(high)


def bootstrap_band(
    members: Sequence[DetSeries],
    n_surrogates: int = DEFAULT_SURROGATES,
    quantiles: Tuple[float, float] = DEFAULT_QUANTILES,
    seed: int = 0,
) -> Tuple[np.ndarray, np.ndarray]:
    """Surrogate confidence band for SDET.

    For each member, surrogate DET values are built from the mean number of
    diagonal structures per window with lengths drawn from the window-averaged
    length distribution; the band is the quantile pair of the surrogates. The
    member bands are averaged at each t over the members valid there.
    """
    if not members:
        raise ConfigError("bootstrap needs at least one DET series")
    if n_surrogates < 100:
        raise ConfigError(f"bootstrap needs at least 100 surrogates, got {n_surrogates}")
    q_low, q_high = quantiles
    if not 0 <= q_low < q_high <= 1:
        raise ConfigError(f"invalid quantile pair {quantiles}")
    timeline = members[0].rec_timeline
    if any(m.rec_timeline != timeline for m in members):
        raise TimelineMismatchError("DET series do not share a recurrence timeline")

    streams = np.random.SeedSequence(seed).spawn(len(members))
    lows, highs = [], []
    for det, stream in zip(members, streams):
        low, high = _member_band(det, n_surrogates, (q_low, q_high), np.random.default_rng(stream))
        logger.debug(f"Bootstrap band omega={det.omega}: [{low:.4f}, {high:.4f}]")
        lows.append(np.where(det.valid_mask, low, 0.0))
        highs.append(np.where(det.valid_mask, high, 0.0))

    counts = np.vstack([m.valid_mask for m in members]).sum(axis=0)
    ci_low = np.full(timeline.count, np.nan)
    ci_high = np.full(timeline.count, np.nan)
    np.divide(np.sum(lows, axis=0), counts, out=ci_low, where=counts > 0)
    np.divide(np.sum(highs, axis=0), counts, out=ci_high, where=counts > 0)
    return ci_low, ci_high


def significance_flags(sd: SDetSeries) -> np.ndarray:
    """high above the band, low below it, none inside or where undefined"""
    if sd.ci_low is None or sd.ci_high is None:
        raise ConfigError("SDET series has no confidence band")
    flags = np.full(sd.rec_timeline.count, FLAG_NONE, dtype=object)
    with np.errstate(invalid="ignore"):
        flags[sd.values > sd.ci_high] = FLAG_HIGH
        flags[sd.values < sd.ci_low] = FLAG_LOW
    return flags
