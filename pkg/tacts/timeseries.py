import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from tacts.errors import (
    ConfigError,
    DataError,
    DuplicateTimeError,
    NonFiniteError,
)

logger = logging.getLogger("tacts.timeseries")


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class IrregularSeries:
    """Ordered (time, amplitude) measurements with non-uniform spacing"""

    times: np.ndarray
    values: np.ndarray
    time_unit: str = ""
    value_unit: str = ""

    def __post_init__(self):
        times = _frozen_array(self.times).ravel()
        values = _frozen_array(self.values).ravel()
        if times.size == 0:
            raise DataError("series is empty")
        if times.size != values.size:
            raise DataError(
                f"times and values differ in length ({times.size} != {values.size})"
            )
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(values)):
            raise NonFiniteError("series contains non-finite times or values")
        steps = np.diff(times)
        if np.any(steps == 0):
            raise DuplicateTimeError(float(times[1:][steps == 0][0]))
        if np.any(steps < 0):
            raise DataError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.times.size

    @property
    def span(self) -> Tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])


def make_series(times, values, time_unit: str = "", value_unit: str = "") -> IrregularSeries:
    return IrregularSeries(times, values, time_unit, value_unit)


@dataclass(frozen=True)
class RegularTimeline:
    """Evenly spaced evaluation points {t0 + i*step | 0 <= i < count}"""

    t0: float
    step: float
    count: int

    def __post_init__(self):
        if not (math.isfinite(self.t0) and math.isfinite(self.step)):
            raise ConfigError("timeline start and step must be finite")
        if self.step <= 0:
            raise ConfigError(f"timeline step must be positive, got {self.step}")
        if int(self.count) != self.count or self.count < 1:
            raise ConfigError(f"timeline count must be a positive integer, got {self.count}")
        object.__setattr__(self, "count", int(self.count))

    def points(self) -> np.ndarray:
        return self.t0 + self.step * np.arange(self.count, dtype=float)

    @property
    def end(self) -> float:
        return self.t0 + self.step * (self.count - 1)


def timeline_points(tl: RegularTimeline) -> np.ndarray:
    return tl.points()


def default_timeline(series: IrregularSeries, step: float = 1.0, t0: Optional[float] = None) -> RegularTimeline:
    """Timeline with the given step covering the data span.

    Without an explicit start it begins at the first multiple of step inside
    the span.
    """
    first, last = series.span
    if t0 is None:
        t0 = math.ceil(first / step) * step
    if t0 > last:
        raise ConfigError(f"timeline start {t0} with step {step} lies after the data span [{first}, {last}]")
    count = int(math.floor((last - t0) / step + 1e-9)) + 1
    return RegularTimeline(t0, step, count)


@dataclass(frozen=True, eq=False)
class Segment:
    """Measurements of one half-open interval, timed relative to its start"""

    rel_times: np.ndarray
    amplitudes: np.ndarray
    origin: float
    width: float

    def __len__(self) -> int:
        return self.rel_times.size

    @property
    def is_empty(self) -> bool:
        return self.rel_times.size == 0

    @classmethod
    def from_points(cls, points: Sequence[Tuple[float, float]], origin: float = 0.0, width: float = None):
        """Build a segment straight from (rel_time, amplitude) pairs"""
        pts = sorted(points)
        rel = np.array([p[0] for p in pts], dtype=float)
        amp = np.array([p[1] for p in pts], dtype=float)
        if width is None:
            width = float(rel.max()) + 1.0 if rel.size else 1.0
        return cls(rel, amp, origin, width)


def _slice_segment(series: IrregularSeries, lo: int, hi: int, origin: float, width: float) -> Segment:
    rel = series.times[lo:hi] - origin
    # origin + width rounding can admit a point whose offset rounds up to width
    rel = np.minimum(rel, np.nextafter(width, 0.0))
    return Segment(rel, series.values[lo:hi].copy(), float(origin), float(width))


def extract_segment(series: IrregularSeries, start: float, width: float) -> Segment:
    """Points with absolute time in [start, start + width)"""
    if width <= 0:
        raise ConfigError(f"segment width must be positive, got {width}")
    lo = np.searchsorted(series.times, start, side="left")
    hi = np.searchsorted(series.times, start + width, side="left")
    return _slice_segment(series, lo, hi, start, width)


def segment_bounds(times: np.ndarray, points: np.ndarray, omega: float):
    """Index bounds of [t - omega, t) and [t, t + omega) for every t in points.

    Returns (a_lo, mid, b_hi): S_a(t) = times[a_lo:mid], S_b(t) = times[mid:b_hi].
    Both segments share the split index so a point at t is never counted twice.
    """
    a_lo = np.searchsorted(times, points - omega, side="left")
    mid = np.searchsorted(times, points, side="left")
    b_hi = np.searchsorted(times, points + omega, side="left")
    return a_lo, mid, b_hi


def segment_pair(series: IrregularSeries, t: float, omega: float) -> Tuple[Segment, Segment]:
    """The segments before and after t: [t - omega, t) and [t, t + omega)"""
    if omega <= 0:
        raise ConfigError(f"segment width must be positive, got {omega}")
    a_lo, mid, b_hi = (int(i[0]) for i in segment_bounds(series.times, np.array([t], dtype=float), omega))
    return (
        _slice_segment(series, a_lo, mid, t - omega, omega),
        _slice_segment(series, mid, b_hi, t, omega),
    )


@dataclass(frozen=True, eq=False)
class SegmentPairs:
    """Before/after segments of every timeline point for one segment width"""

    timeline: RegularTimeline
    omega: float
    gap_mask: np.ndarray
    pairs: Tuple[Tuple[Segment, Segment], ...]

    @property
    def n_valid(self) -> int:
        return len(self.pairs)


def collect_segment_pairs(series: IrregularSeries, tl: RegularTimeline, omega: float) -> SegmentPairs:
    """Segment pairs for all non-gap timeline points.

    A point is a gap when either of its segments is empty.
    """
    if omega <= 0:
        raise ConfigError(f"segment width must be positive, got {omega}")
    points = tl.points()
    a_lo, mid, b_hi = segment_bounds(series.times, points, omega)
    gaps = (mid == a_lo) | (b_hi == mid)
    pairs = tuple(
        (
            _slice_segment(series, a_lo[i], mid[i], points[i] - omega, omega),
            _slice_segment(series, mid[i], b_hi[i], points[i], omega),
        )
        for i in np.flatnonzero(~gaps)
    )
    gaps.setflags(write=False)
    return SegmentPairs(tl, float(omega), gaps, pairs)


@dataclass(frozen=True)
class SamplingStats:
    mean_dt: float
    std_dt: float
    count: int


def sampling_stats(series: IrregularSeries) -> SamplingStats:
    if len(series) < 2:
        raise DataError("sampling statistics need at least 2 points")
    diffs = np.diff(series.times)
    return SamplingStats(float(diffs.mean()), float(diffs.std()), len(series))


@dataclass(frozen=True, eq=False)
class RegularSeries:
    """Values on a regular timeline; gap-masked points carry no value"""

    timeline: RegularTimeline
    values: np.ndarray
    gap_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        values = _frozen_array(self.values)
        if values.size != self.timeline.count:
            raise DataError(
                f"{values.size} values for a timeline of {self.timeline.count} points"
            )
        gaps = np.zeros(values.size, dtype=bool) if self.gap_mask is None else np.array(self.gap_mask, dtype=bool)
        gaps.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "gap_mask", gaps)

    def filled(self) -> np.ndarray:
        """Non-gap values in timeline order"""
        return self.values[~self.gap_mask]
