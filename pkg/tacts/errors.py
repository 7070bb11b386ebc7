"""Exception hierarchy for the TACTS toolkit.

Every error carries the process exit code the CLI reports for it: 2 for bad
configuration, 3 for unusable data, 4 for numerical failures and 1 for
anything else.
"""


class TactsError(Exception):
    """Base class for all toolkit errors"""

    exit_code = 1

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.message = message

    def to_record(self) -> dict:
        return {
            "error": type(self).__name__,
            "message": self.message,
            "exit_code": self.exit_code,
        }


# Configuration


class ConfigError(TactsError, ValueError):
    """A parameter violates a module precondition"""

    exit_code = 2


# Data


class DataError(TactsError, ValueError):
    exit_code = 3


class ParseError(DataError):
    def __init__(self, message: str, line: int = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateTimeError(DataError):
    def __init__(self, time: float):
        super().__init__(f"duplicate timestamp {time!r}")
        self.time = time


class NonFiniteError(DataError):
    pass


class GapError(DataError):
    """Both segments are empty; the caller should have gap-masked this point"""


class AllGapsError(DataError):
    pass


class DegenerateAmplitudeError(DataError):
    pass


class SegmentTooSmallError(DataError):
    pass


class EmptySeriesError(DataError):
    pass


class ExtrapolationError(DataError):
    pass


class TimelineMismatchError(DataError):
    pass


class EmptyOverlapError(DataError):
    pass


class SizeLimitError(DataError):
    pass


# Numerics


class NumericalError(TactsError, ArithmeticError):
    exit_code = 4


class DegenerateDistributionError(NumericalError):
    pass


class OptimizationError(NumericalError):
    pass


class UndefinedDeterminismError(NumericalError):
    pass


class EmptyDetError(NumericalError):
    pass


class SpectrumError(NumericalError):
    """Every member of a spectrum failed"""

    def __init__(self, message: str, failures: dict = None):
        super().__init__(message)
        self.failures = failures or {}


class OrbitEscapeError(NumericalError):
    pass
