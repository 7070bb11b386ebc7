import logging
import os
import sys
from typing import List, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ValidationError, field_validator, model_validator

from tacts.errors import ConfigError
from tacts.logistic_bench import DEFAULT_BENCH_FIT_POINTS, BenchmarkGrid, DriftSchedule
from tacts.transform_cost import DEFAULT_GRID_SIZE

# Load environment variables
load_dotenv()

TACTS_ENV = os.getenv("TACTS_ENV", "production")
DEFAULT_WORKERS = int(os.getenv("TACTS_WORKERS", "1"))
DEFAULT_OUT_DIR = os.getenv("TACTS_OUT_DIR", "results")
DEFAULT_SEED = int(os.getenv("TACTS_SEED", "0"))

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def configure_logging(stream=sys.stderr):
    """Single logging setup for the CLI; DEBUG when TACTS_ENV=development"""
    level = logging.DEBUG if TACTS_ENV == "development" else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, handlers=[logging.StreamHandler(stream)])
    logging.getLogger("tacts").setLevel(level)


def _positive(name: str, v: float) -> float:
    if not v > 0:
        raise ValueError(f"{name} must be positive")
    return v


class TimelineConfig(BaseModel):
    """Regular TACTS timeline; a missing t0 or count is derived from the data span"""

    t0: Optional[float] = None
    step: float = 1.0
    count: Optional[int] = None

    @field_validator("step")
    @classmethod
    def validate_step(cls, v):
        return _positive("timeline step", v)

    @field_validator("count")
    @classmethod
    def validate_count(cls, v):
        if v is not None and v < 1:
            raise ValueError("timeline count must be at least 1")
        return v


class OmegaPolicy(BaseModel):
    """Segment widths in multiples of the mean sampling step"""

    units_min: float = 4.0
    units_max: float = 9.5
    units_step: float = 0.5

    @field_validator("units_min", "units_step")
    @classmethod
    def validate_units(cls, v, info):
        return _positive(info.field_name, v)

    @model_validator(mode="after")
    def validate_range(self):
        if self.units_max < self.units_min:
            raise ValueError(f"omega units range {self.units_min}:{self.units_max} is empty")
        return self


class RunConfig(BaseModel):
    input: str
    timeline: TimelineConfig = TimelineConfig()
    omega_policy: Optional[OmegaPolicy] = None
    omega_list: Optional[List[float]] = None
    lambda_grid_size: int = DEFAULT_GRID_SIZE
    lambda_fit_points: Optional[int] = None
    frame_L: float = 200.0
    rec_step: float = 5.0
    rec_t0: Optional[float] = None
    rec_count: Optional[int] = None
    eps_fraction: float = 0.1
    l_min: int = 2
    min_window_points: int = 10
    n_surrogates: int = 1000
    quantiles: Tuple[float, float] = (0.01, 0.99)
    seed: int = DEFAULT_SEED
    workers: int = DEFAULT_WORKERS
    out_dir: str = DEFAULT_OUT_DIR
    include_loi: bool = True
    dp_approx: bool = False
    keep_partial: bool = False

    @field_validator("input")
    @classmethod
    def validate_input(cls, v):
        if not os.path.isfile(v):
            raise ValueError(f"input file {v} does not exist")
        return v

    @field_validator("omega_list")
    @classmethod
    def validate_omega_list(cls, v):
        if v is None:
            return v
        if not v:
            raise ValueError("omega list is empty")
        if any(w <= 0 for w in v):
            raise ValueError("omega values must be positive")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("omega values must be strictly increasing")
        return v

    @field_validator("lambda_grid_size")
    @classmethod
    def validate_lambda_grid_size(cls, v):
        if v < 2:
            raise ValueError("lambda grid needs at least 2 candidates")
        return v

    @field_validator("lambda_fit_points")
    @classmethod
    def validate_lambda_fit_points(cls, v):
        if v is not None and v < 2:
            raise ValueError("lambda fit needs at least 2 points")
        return v

    @field_validator("frame_L", "rec_step")
    @classmethod
    def validate_recurrence(cls, v, info):
        return _positive(info.field_name, v)

    @field_validator("rec_count")
    @classmethod
    def validate_rec_count(cls, v):
        if v is not None and v < 1:
            raise ValueError("recurrence timeline count must be at least 1")
        return v

    @field_validator("eps_fraction")
    @classmethod
    def validate_eps_fraction(cls, v):
        if v < 0:
            raise ValueError("eps fraction must be non-negative")
        return v

    @field_validator("l_min")
    @classmethod
    def validate_l_min(cls, v):
        if v < 1:
            raise ValueError("l_min must be at least 1")
        return v

    @field_validator("min_window_points")
    @classmethod
    def validate_min_window_points(cls, v):
        if v < 2:
            raise ValueError("a recurrence window needs at least 2 points")
        return v

    @field_validator("n_surrogates")
    @classmethod
    def validate_n_surrogates(cls, v):
        if v < 100:
            raise ValueError("bootstrap needs at least 100 surrogates")
        return v

    @field_validator("quantiles")
    @classmethod
    def validate_quantiles(cls, v):
        lo, hi = v
        if not 0 <= lo < hi <= 1:
            raise ValueError(f"invalid quantile pair {lo}:{hi}")
        return v

    @field_validator("seed")
    @classmethod
    def validate_seed(cls, v):
        if v < 0:
            raise ValueError("seed must be non-negative")
        return v

    @field_validator("workers")
    @classmethod
    def validate_workers(cls, v):
        if v < 1:
            raise ValueError("workers must be at least 1")
        return v

    @model_validator(mode="after")
    def validate_run(self):
        if self.omega_policy is not None and self.omega_list is not None:
            raise ValueError("give either an omega unit range or an omega list, not both")
        if self.omega_policy is None and self.omega_list is None:
            self.omega_policy = OmegaPolicy()
        if self.frame_L <= self.rec_step:
            raise ValueError(f"frame L={self.frame_L} must exceed the recurrence step {self.rec_step}")
        return self


class BenchConfig(BaseModel):
    r_start: float = 3.5
    r_end: float = 4.0
    n_steps: int = 20000
    transient: int = 1000
    removals: List[float] = [0.0, 0.1, 0.2]
    noise_ks: List[float] = [0.1, 0.2, 0.3]
    cells: Optional[List[Tuple[float, float]]] = None
    frames: List[float] = [100.0, 150.0, 200.0, 300.0, 400.0]
    rec_step: float = 10.0
    omega_policy: OmegaPolicy = OmegaPolicy(units_min=3.0, units_max=12.0, units_step=0.5)
    lambda_grid_size: int = DEFAULT_GRID_SIZE
    lambda_fit_points: Optional[int] = DEFAULT_BENCH_FIT_POINTS
    eps_fraction: float = 0.1
    l_min: int = 2
    min_window_points: int = 10
    include_loi: bool = False
    per_omega: bool = True
    seed: int = DEFAULT_SEED
    workers: int = DEFAULT_WORKERS
    out_dir: str = DEFAULT_OUT_DIR

    @field_validator("r_start", "r_end")
    @classmethod
    def validate_r(cls, v):
        if not 0 < v <= 4:
            raise ValueError("control parameter must lie in (0, 4]")
        return v

    @field_validator("n_steps")
    @classmethod
    def validate_n_steps(cls, v):
        if v < 2:
            raise ValueError("trajectory needs at least 2 steps")
        return v

    @field_validator("removals")
    @classmethod
    def validate_removals(cls, v):
        if any(not 0 <= f < 1 for f in v):
            raise ValueError("removal fractions must lie in [0, 1)")
        return v

    @field_validator("noise_ks")
    @classmethod
    def validate_noise_ks(cls, v):
        if any(k < 0 for k in v):
            raise ValueError("noise bounds must be non-negative")
        return v

    @field_validator("lambda_fit_points")
    @classmethod
    def validate_lambda_fit_points(cls, v):
        if v is not None and v < 2:
            raise ValueError("lambda fit needs at least 2 points")
        return v

    @field_validator("frames")
    @classmethod
    def validate_frames(cls, v):
        if not v or any(f <= 0 for f in v):
            raise ValueError("recurrence frames must be positive")
        return v

    @field_validator("workers")
    @classmethod
    def validate_workers(cls, v):
        if v < 1:
            raise ValueError("workers must be at least 1")
        return v

    @model_validator(mode="after")
    def validate_bench(self):
        if any(f <= self.rec_step for f in self.frames):
            raise ValueError(f"every frame must exceed the recurrence step {self.rec_step}")
        if self.cells is not None and not self.cells:
            raise ValueError("cell list is empty")
        return self

    def grid_cells(self) -> Tuple[Tuple[float, float], ...]:
        if self.cells is not None:
            return tuple((float(r), float(k)) for r, k in self.cells)
        return tuple((r, k) for r in self.removals for k in self.noise_ks)

    def to_grid(self) -> BenchmarkGrid:
        return BenchmarkGrid(
            schedule=DriftSchedule(self.r_start, self.r_end, self.n_steps),
            cells=self.grid_cells(),
            frames=tuple(self.frames),
            rec_step=self.rec_step,
            omega_units=(self.omega_policy.units_min, self.omega_policy.units_max, self.omega_policy.units_step),
            grid_size=self.lambda_grid_size,
            fit_points=self.lambda_fit_points,
            eps_fraction=self.eps_fraction,
            l_min=self.l_min,
            include_loi=self.include_loi,
            min_points=self.min_window_points,
            transient=self.transient,
            per_omega=self.per_omega,
            seed=self.seed,
            workers=self.workers,
        )


def build_config(model, **values):
    """Validate a config model, turning pydantic errors into ConfigError"""
    try:
        return model(**values)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"invalid {model.__name__}: {problems}") from e
