import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import tacts.logistic_bench as bench
from tacts.errors import (
    ConfigError,
    DataError,
    EmptyDetError,
    EmptyOverlapError,
    ExtrapolationError,
)
from tacts.logistic_bench import (
    METHOD_INTERP,
    METHOD_TACTS,
    BenchmarkGrid,
    Classification,
    DistortionConfig,
    DriftSchedule,
    RegimeLabels,
    bifurcation_data,
    classify_by_det,
    distort,
    ground_truth,
    linear_interpolation_baseline,
    logistic_trajectory,
    lyapunov_exponent,
    mismatch_ratio,
    periodic_windows,
    recurrence_timeline,
    region_mean_excess,
    run_benchmark,
)
from tacts.recurrence import det_series
from tacts.spectrum import build_spectrum
from tacts.timeseries import RegularTimeline, default_timeline, make_series


def labels(periodic, valid=None):
    periodic = np.asarray(periodic, dtype=bool)
    valid = np.ones(periodic.size, dtype=bool) if valid is None else np.asarray(valid, dtype=bool)
    return Classification(np.arange(periodic.size, dtype=float), periodic, valid)


def test_schedule_ramp():
    schedule = DriftSchedule(3.5, 4.0, 4)
    assert schedule.r_values().tolist() == [3.5, 3.625, 3.75, 3.875]
    assert schedule.r_at(np.array([1.0, 4.0])).tolist() == [3.5, 3.875]


@pytest.mark.parametrize("r_start, r_end, n_steps", [(0.0, 4.0, 10), (3.5, 4.5, 10), (3.5, 4.0, 0)])
def test_schedule_rejects_invalid(r_start, r_end, n_steps):
    with pytest.raises(ConfigError):
        DriftSchedule(r_start, r_end, n_steps)


def test_trajectory_from_the_critical_point():
    series = logistic_trajectory(DriftSchedule(4.0, 4.0, 5), 0.5, transient=0)
    assert series.times.tolist() == [1.0, 2.0, 3.0, 4.0, 5.0]
    assert series.values.tolist() == [1.0, 0.0, 0.0, 0.0, 0.0]


def test_trajectory_converges_to_the_fixed_point():
    series = logistic_trajectory(DriftSchedule(2.0, 2.0, 50), 0.3, transient=100)
    np.testing.assert_allclose(series.values, 0.5, atol=1e-12)


def test_drifting_trajectory_stays_in_the_unit_interval():
    series = logistic_trajectory(DriftSchedule(3.5, 4.0, 5000), 0.3)
    assert np.all((series.values >= 0) & (series.values <= 1))
    r, x = bifurcation_data(DriftSchedule(3.5, 4.0, 5000), 0.3)
    assert r[0] == 3.5
    assert np.array_equal(x, series.values)


@pytest.mark.parametrize("x0", [0.0, 1.0, -0.2, 1.5])
def test_trajectory_rejects_bad_initial_condition(x0):
    with pytest.raises(ConfigError):
        logistic_trajectory(DriftSchedule(3.5, 4.0, 10), x0)


def synthetic_series(n=20000):
    t = np.arange(1.0, n + 1)
    return make_series(t, np.sin(t / 7.0))


def test_distort_without_distortion_is_identity():
    series = synthetic_series(500)
    out = distort(series, DistortionConfig(0.0, 0.0, seed=3))
    assert np.array_equal(out.times, series.times)
    assert np.array_equal(out.values, series.values)


def test_distort_removes_and_bounds_noise():
    series = synthetic_series()
    out = distort(series, DistortionConfig(0.1, 0.3, seed=11))
    assert len(out) == 18000
    assert np.all(np.diff(out.times) > 0)
    idx = np.searchsorted(series.times, out.times)
    assert np.array_equal(series.times[idx], out.times)
    noise = out.values - series.values[idx]
    assert np.max(np.abs(noise)) <= 0.3 * series.values.std() * (1 + 1e-9)


def test_distort_is_seeded():
    series = synthetic_series(2000)
    a = distort(series, DistortionConfig(0.2, 0.1, seed=1))
    b = distort(series, DistortionConfig(0.2, 0.1, seed=1))
    c = distort(series, DistortionConfig(0.2, 0.1, seed=2))
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.times, c.times)


@pytest.mark.parametrize("removal, noise", [(1.0, 0.1), (-0.1, 0.1), (0.1, -1.0)])
def test_distortion_config_rejects_invalid(removal, noise):
    with pytest.raises(ConfigError):
        DistortionConfig(removal, noise)


def test_lyapunov_of_the_fully_chaotic_map():
    assert lyapunov_exponent(4.0, iters=100000) == pytest.approx(math.log(2.0), abs=0.01)


def test_lyapunov_sign():
    assert lyapunov_exponent(3.2) < 0
    assert lyapunov_exponent(3.9) > 0


def test_lyapunov_needs_iterations():
    with pytest.raises(ConfigError):
        lyapunov_exponent(3.9, iters=10)


def test_ground_truth_constant_parameter():
    chaotic = ground_truth(DriftSchedule(4.0, 4.0, 50), iters=5000)
    assert not chaotic.periodic.any()
    assert not chaotic.marginal.any()
    periodic = ground_truth(DriftSchedule(3.2, 3.2, 50), iters=5000)
    assert periodic.periodic.all()


def test_dead_band_marks_marginal_points():
    truth = ground_truth(DriftSchedule(4.0, 4.0, 20), iters=5000, dead_band=1.0)
    assert truth.marginal.all()
    assert not truth.periodic.any()


def test_accumulation_point_is_marginal():
    truth = ground_truth(DriftSchedule(3.5699457, 3.5699457, 20))
    assert truth.marginal.all()
    assert np.all(np.abs(truth.lyapunov) < 1e-3)


def test_periodic_windows_inside_the_period_three_window():
    windows = periodic_windows(3.83, 3.84, resolution=1e-4)
    assert len(windows) == 1
    assert windows[0] == pytest.approx((3.83, 3.84))


def test_periodic_windows_find_the_period_three_onset():
    start, end = max(periodic_windows(3.82, 3.84, resolution=1e-4), key=lambda w: w[1] - w[0])
    assert 3.827 <= start <= 3.831
    assert end == pytest.approx(3.84)


@pytest.mark.parametrize("r_lo, r_hi, resolution", [(3.9, 3.8, 1e-4), (3.8, 4.5, 1e-4), (3.8, 3.9, 0.0)])
def test_periodic_windows_rejects_invalid(r_lo, r_hi, resolution):
    with pytest.raises(ConfigError):
        periodic_windows(r_lo, r_hi, resolution)


def test_ground_truth_depends_only_on_r():
    short = ground_truth(DriftSchedule(3.5, 4.0, 100), grid_size=200, iters=2000)
    long = ground_truth(DriftSchedule(3.5, 4.0, 200), grid_size=200, iters=2000)
    assert np.array_equal(short.periodic, long.periodic[::2])
    assert np.array_equal(short.r, long.r[::2])


def test_classify_by_det_thresholds_at_the_mean():
    result = classify_by_det([0.0, 1.0, 2.0, 3.0], [0.0, 0.5, 1.0, np.nan])
    assert result.periodic.tolist() == [False, False, True, False]
    assert result.valid.tolist() == [True, True, True, False]


def test_classify_constant_det():
    assert not classify_by_det(np.arange(5.0), np.full(5, 0.7)).periodic.any()


def test_classify_needs_two_valid_values():
    with pytest.raises(EmptyDetError):
        classify_by_det([0.0, 1.0], [0.4, np.nan])


@given(
    st.lists(st.integers(0, 10), min_size=2, max_size=20),
    st.integers(1, 5),
    st.integers(-5, 5),
)
def test_classification_is_affine_invariant(values, a, b):
    times = np.arange(len(values), dtype=float)
    base = classify_by_det(times, np.array(values, dtype=float))
    moved = classify_by_det(times, a * np.array(values, dtype=float) + b)
    assert base.periodic.tolist() == moved.periodic.tolist()


def test_linear_interpolation_baseline():
    series = make_series([0.0, 1.0, 2.0, 3.0], [0.0, 2.0, 4.0, 6.0])
    rs = linear_interpolation_baseline(series, RegularTimeline(0.5, 1.0, 3))
    assert rs.values.tolist() == [1.0, 3.0, 5.0]
    assert not rs.gap_mask.any()


def test_interpolation_refuses_to_extrapolate():
    series = make_series([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
    with pytest.raises(ExtrapolationError):
        linear_interpolation_baseline(series, RegularTimeline(-1.0, 1.0, 3))
    with pytest.raises(ExtrapolationError):
        linear_interpolation_baseline(series, RegularTimeline(1.0, 1.0, 3))


def test_mismatch_ratio_examples():
    truth = labels([True, False, True, False])
    assert mismatch_ratio(labels([True, False, True, False]), truth) == 0.0
    assert mismatch_ratio(labels([False, True, False, True]), truth) == 1.0
    assert mismatch_ratio(labels([True, True, False, False]), truth) == 0.5


def test_mismatch_ratio_only_counts_shared_valid_points():
    pred = labels([True, True, True, True], [True, True, False, False])
    truth = labels([True, False, False, False], [False, True, True, True])
    assert mismatch_ratio(pred, truth) == 1.0


def test_mismatch_ratio_needs_overlap():
    with pytest.raises(EmptyOverlapError):
        mismatch_ratio(labels([True, False], [True, False]), labels([True, False], [False, True]))
    with pytest.raises(EmptyOverlapError):
        mismatch_ratio(labels([True]), labels([True, False]))


def test_mismatch_ratio_against_regime_labels():
    times = np.arange(1.0, 5.0)
    truth = RegimeLabels(times, times, -times, np.array([True, True, False, False]), np.zeros(4, dtype=bool))
    pred = Classification(np.array([2.0, 3.0]), np.array([True, True]), np.array([True, True]))
    assert mismatch_ratio(pred, truth) == 0.5


bool_lists = st.lists(st.booleans(), min_size=6, max_size=6)


@given(bool_lists, bool_lists, bool_lists)
def test_mismatch_ratio_is_a_metric(a, b, c):
    a, b, c = labels(a), labels(b), labels(c)
    assert mismatch_ratio(a, b) == mismatch_ratio(b, a)
    assert mismatch_ratio(a, c) <= mismatch_ratio(a, b) + mismatch_ratio(b, c) + 1e-12


def test_recurrence_timeline_keeps_windows_inside():
    rec_tl = recurrence_timeline(RegularTimeline(1.0, 1.0, 1000), 100.0, 10.0)
    assert rec_tl.t0 == 51.0
    assert rec_tl.end <= 1000.0 - 50.0
    assert rec_tl.count == 90
    with pytest.raises(ConfigError):
        recurrence_timeline(RegularTimeline(1.0, 1.0, 50), 100.0, 10.0)


def test_benchmark_grid_defaults():
    grid = BenchmarkGrid()
    assert len(grid.cells) == 9
    assert grid.frames == (100.0, 150.0, 200.0, 300.0, 400.0)
    assert grid.schedule == DriftSchedule(3.5, 4.0, 20000)
    with pytest.raises(ConfigError):
        BenchmarkGrid(frames=(10.0,), rec_step=10.0)


def small_grid(**overrides):
    values = dict(
        schedule=DriftSchedule(3.5, 4.0, 1500),
        cells=((0.1, 0.1),),
        frames=(100.0,),
        rec_step=20.0,
        omega_units=(3.0, 4.0, 1.0),
        grid_size=5,
        fit_points=100,
    )
    values.update(overrides)
    return BenchmarkGrid(**values)


def test_small_benchmark_run():
    report = run_benchmark(small_grid())
    assert report.failures == {}
    methods = report.rows["method"].tolist()
    assert methods[:2] == [METHOD_TACTS, METHOD_INTERP]
    assert len(methods) == 4
    assert all(m.startswith("tacts_det_omega=") for m in methods[2:])
    assert report.rows["E"].between(0.0, 1.0).all()
    assert list(report.dumps) == [(0, 100.0)]
    dump = report.dumps[(0, 100.0)]
    assert list(dump.columns) == [
        "t", "r", "truth_periodic", "truth_marginal", "sdet", "sdet_centered", "sdet_periodic",
        "interp_det", "interp_periodic",
    ]
    # labels threshold the centered average at its mean
    centered = dump["sdet_centered"]
    assert (dump["sdet_periodic"] == (centered > centered.mean()).astype(int)).all()
    assert list(report.bifurcation.columns) == ["t", "r", "x"]
    assert len(report.bifurcation) == 1500
    mean = report.mean_errors()
    assert set(mean["method"]) == set(methods)
    assert len(report.errors(METHOD_TACTS)) == 1


def test_benchmark_is_reproducible():
    first = run_benchmark(small_grid(per_omega=False))
    second = run_benchmark(small_grid(per_omega=False))
    assert first.rows.equals(second.rows)


def test_failing_cell_does_not_abort_the_sweep(monkeypatch):
    real_distort = bench.distort

    def flaky(series, cfg):
        if cfg.removal_fraction == 0.5:
            raise DataError("simulated failure")
        return real_distort(series, cfg)

    monkeypatch.setattr(bench, "distort", flaky)
    report = run_benchmark(small_grid(cells=((0.5, 0.1), (0.1, 0.1)), per_omega=False))
    assert list(report.failures) == [0]
    assert "simulated failure" in report.failures[0]
    failed = report.rows[report.rows["removal"] == 0.5]
    assert len(failed) == 2
    assert failed["E"].isna().all()
    assert report.rows[report.rows["removal"] == 0.1]["E"].notna().all()


# Full-size trend checks; run with `pytest -m slow`


@pytest.mark.slow
def test_spectrum_beats_interpolation_on_the_default_grid():
    report = run_benchmark(BenchmarkGrid(workers=4))
    assert report.failures == {}
    cell = report.rows[(report.rows["removal"] == 0.1) & (report.rows["noise_K"] == 0.3)]
    tacts = cell[cell["method"] == METHOD_TACTS].set_index("L")["E"]
    interp = cell[cell["method"] == METHOD_INTERP].set_index("L")["E"]
    assert (tacts < interp).all()

    mean = report.mean_errors().groupby("method")["mean_E"].mean()
    assert mean[METHOD_TACTS] < mean[METHOD_INTERP]

    # the spectrum average is about as good as its best member
    for frame in BenchmarkGrid().frames:
        rows = report.rows[(report.rows["L"] == frame) & (report.rows["removal"] == 0.1)]
        members = rows[rows["method"].str.startswith("tacts_det_omega=")]
        for k, group in members.groupby("noise_K"):
            spectrum_error = rows[(rows["method"] == METHOD_TACTS) & (rows["noise_K"] == k)]["E"].iloc[0]
            assert spectrum_error <= group["E"].min() + 0.02


@pytest.mark.slow
def test_segment_width_selects_periodic_windows():
    schedule = DriftSchedule()
    trajectory = logistic_trajectory(schedule, 0.4)
    distorted = distort(trajectory, DistortionConfig(0.1, 0.1, seed=0))
    tl = default_timeline(distorted, 1.0)
    spectrum = build_spectrum(distorted, tl, [4.25, 6.75], workers=2, fit_points=2000)
    rec_tl = recurrence_timeline(tl, 150.0, 10.0)

    def widest(r_lo, r_hi):
        return max(periodic_windows(r_lo, r_hi), key=lambda w: w[1] - w[0])

    period4, period7 = widest(3.955, 3.965), widest(3.695, 3.71)
    assert 3.959 <= period4[0] <= 3.962
    assert 3.700 <= period7[0] <= 3.703

    short, wide = (det_series(member, rec_tl, 150.0, include_loi=False) for member in spectrum.members)
    assert region_mean_excess(short, schedule, *period4) > 0
    assert region_mean_excess(wide, schedule, *period7) > 0
    assert region_mean_excess(short, schedule, *period7) <= 0
    assert region_mean_excess(wide, schedule, *period4) <= 0
