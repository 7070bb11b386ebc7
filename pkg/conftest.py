import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tacts.timeseries import IrregularSeries

settings.register_profile("tacts", deadline=None, max_examples=100, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("tacts")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def irregular_sine(rng):
    """~400 points with spacing in [0.5, 1.5] and a period of 17 time units"""
    times = np.cumsum(rng.uniform(0.5, 1.5, size=400))
    values = np.sin(2 * np.pi * times / 17.0) + 0.1 * rng.standard_normal(times.size)
    return IrregularSeries(times, values)


@pytest.fixture
def series_file(tmp_path):
    """Write (time, value) rows to a CSV file and return its path"""

    def write(times, values, name="series.csv", header=None):
        path = tmp_path / name
        lines = [] if header is None else [header]
        lines += [f"{float(t)!r},{float(v)!r}" for t, v in zip(times, values)]
        path.write_text("\n".join(lines) + "\n")
        return str(path)

    return write
