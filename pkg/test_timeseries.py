import numpy as np
import pytest
from hypothesis import given, strategies as st

from tacts.errors import ConfigError, DataError, DuplicateTimeError, NonFiniteError
from tacts.timeseries import (
    IrregularSeries,
    RegularSeries,
    RegularTimeline,
    collect_segment_pairs,
    default_timeline,
    extract_segment,
    make_series,
    sampling_stats,
    segment_pair,
    timeline_points,
)


def hole_series():
    """Unit sampling on [0, 10] and [20, 30]"""
    times = np.concatenate((np.arange(0, 11), np.arange(20, 31))).astype(float)
    return IrregularSeries(times, np.cos(times))


def test_extract_segment_interval_membership():
    series = make_series([1.0, 2.0], [5.0, 6.0])
    seg = extract_segment(series, 0.0, 1.5)
    assert seg.rel_times.tolist() == [1.0]
    assert seg.amplitudes.tolist() == [5.0]


def test_extract_segment_empty_interval():
    seg = extract_segment(make_series([1.0], [5.0]), 2.0, 1.0)
    assert seg.is_empty
    assert len(seg) == 0


def test_extract_segment_is_half_open():
    series = make_series([0.0, 0.5, 1.0], [1.0, 2.0, 3.0])
    seg = extract_segment(series, 0.0, 1.0)
    assert seg.rel_times.tolist() == [0.0, 0.5]
    assert seg.amplitudes.tolist() == [1.0, 2.0]


def test_extract_segment_rejects_nonpositive_width():
    with pytest.raises(ConfigError):
        extract_segment(make_series([0.0, 1.0], [0.0, 1.0]), 0.0, 0.0)


@given(
    st.lists(st.integers(0, 400), min_size=1, max_size=60, unique=True),
    st.integers(-20, 400),
    st.integers(1, 80),
)
def test_adjacent_segments_partition_their_union(ticks, start_tick, width_ticks):
    # quarter-unit grid keeps every boundary exact
    times = np.sort(np.array(ticks, dtype=float)) / 4.0
    series = IrregularSeries(times, np.zeros(times.size))
    start, width = start_tick / 4.0, width_ticks / 4.0

    first = extract_segment(series, start, width)
    second = extract_segment(series, start + width, width)
    inside = times[(times >= start) & (times < start + 2 * width)]

    combined = np.concatenate((first.rel_times + start, second.rel_times + start + width))
    assert combined.tolist() == inside.tolist()
    for seg in (first, second):
        assert np.all(seg.rel_times >= 0)
        assert np.all(seg.rel_times < width)


def test_sampling_stats_regular():
    stats = sampling_stats(make_series([0.0, 1.0, 2.0, 3.0], [0.0] * 4))
    assert stats.mean_dt == 1.0
    assert stats.std_dt == 0.0
    assert stats.count == 4


def test_sampling_stats_uses_population_std():
    stats = sampling_stats(make_series([0.0, 1.0, 3.0], [0.0] * 3))
    assert stats.mean_dt == pytest.approx(1.5)
    assert stats.std_dt == pytest.approx(0.5)


def test_sampling_stats_needs_two_points():
    with pytest.raises(DataError):
        sampling_stats(make_series([0.0], [1.0]))


def test_timeline_points():
    assert RegularTimeline(0.0, 5.0, 3).points().tolist() == [0.0, 5.0, 10.0]
    assert RegularTimeline(0.0, 1.0, 1).points().tolist() == [0.0]
    assert timeline_points(RegularTimeline(2.0, 0.5, 3)).tolist() == [2.0, 2.5, 3.0]
    tl = RegularTimeline(0.0, 5.0, 1001)
    assert tl.points()[-1] == 5000.0
    assert tl.end == 5000.0


@pytest.mark.parametrize("t0, step, count", [(0.0, 0.0, 3), (0.0, -1.0, 3), (0.0, 1.0, 0), (np.nan, 1.0, 2)])
def test_timeline_rejects_invalid(t0, step, count):
    with pytest.raises(ConfigError):
        RegularTimeline(t0, step, count)


def test_default_timeline_aligns_to_step():
    series = make_series(np.linspace(0.3, 10.2, 25), np.zeros(25))
    tl = default_timeline(series, 1.0)
    assert tl.t0 == 1.0
    assert tl.count == 10
    assert tl.end == 10.0


def test_default_timeline_from_an_explicit_start():
    series = make_series(np.linspace(0.3, 10.2, 25), np.zeros(25))
    tl = default_timeline(series, 0.5, t0=2.25)
    assert (tl.t0, tl.count, tl.end) == (2.25, 16, 9.75)
    with pytest.raises(ConfigError):
        default_timeline(series, 1.0, t0=11.0)


def test_duplicate_times_rejected():
    with pytest.raises(DuplicateTimeError) as excinfo:
        make_series([0.0, 1.0, 1.0, 2.0], [0.0, 1.0, 2.0, 3.0])
    assert excinfo.value.time == 1.0
    assert "1.0" in str(excinfo.value)


def test_non_finite_rejected():
    with pytest.raises(NonFiniteError):
        make_series([0.0, 1.0], [0.0, np.inf])


def test_unsorted_and_ragged_rejected():
    with pytest.raises(DataError):
        make_series([1.0, 0.0], [0.0, 0.0])
    with pytest.raises(DataError):
        make_series([0.0, 1.0], [0.0])
    with pytest.raises(DataError):
        make_series([], [])


def test_series_arrays_are_read_only():
    series = make_series([0.0, 1.0], [2.0, 3.0])
    with pytest.raises(ValueError):
        series.values[0] = 9.0


def test_segment_pair_splits_at_t():
    series = make_series(np.arange(6.0), np.arange(6.0) * 10)
    sa, sb = segment_pair(series, 2.0, 2.0)
    assert sa.rel_times.tolist() == [0.0, 1.0]
    assert sa.amplitudes.tolist() == [0.0, 10.0]
    assert sb.rel_times.tolist() == [0.0, 1.0]
    assert sb.amplitudes.tolist() == [20.0, 30.0]


def test_gap_mask_marks_one_sided_emptiness():
    pairs = collect_segment_pairs(hole_series(), RegularTimeline(0.0, 1.0, 31), 2.0)
    expected = [0] + list(range(11, 21))
    assert np.flatnonzero(pairs.gap_mask).tolist() == expected
    assert pairs.n_valid == 31 - len(expected)


def test_gap_mask_ignores_amplitudes(rng):
    series = hole_series()
    shuffled = IrregularSeries(series.times, rng.permutation(series.values))
    tl = RegularTimeline(0.0, 0.5, 61)
    a = collect_segment_pairs(series, tl, 1.5).gap_mask
    b = collect_segment_pairs(shuffled, tl, 1.5).gap_mask
    assert a.tolist() == b.tolist()


def test_wider_segments_gap_less():
    series = hole_series()
    tl = RegularTimeline(0.0, 1.0, 31)
    narrow = collect_segment_pairs(series, tl, 2.0).gap_mask
    wide = collect_segment_pairs(series, tl, 6.0).gap_mask
    assert np.all(wide <= narrow)
    assert wide.sum() < narrow.sum()


def test_regular_series_filled_skips_gaps():
    tl = RegularTimeline(0.0, 1.0, 4)
    rs = RegularSeries(tl, [1.0, np.nan, 3.0, 4.0], [False, True, False, False])
    assert rs.filled().tolist() == [1.0, 3.0, 4.0]


def test_regular_series_length_must_match_timeline():
    with pytest.raises(DataError):
        RegularSeries(RegularTimeline(0.0, 1.0, 3), [1.0, 2.0])
