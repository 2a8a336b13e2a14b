"""Exception hierarchy shared by the toolkit."""


class PufError(Exception):
    """Base class for all toolkit errors."""


class ComparisonError(PufError, ValueError):
    """Two fingerprints of different lengths were compared."""


class AggregationError(PufError, ValueError):
    """Readings could not be combined (empty, mixed devices, mixed lengths or temperatures)."""


class ParameterError(PufError, ValueError):
    """A numeric parameter is outside its valid range."""


class InfeasibleParametersError(ParameterError):
    """Fuzzy-extractor parameters admit no working locker (t > n - k)."""


class CalibrationError(PufError, ValueError):
    """Noise targets cannot be reached by the cell model."""


class ReproductionError(PufError):
    """No digital locker opened: the fingerprint is too far from the enrolled one."""


class FormatError(PufError, ValueError):
    """A readings file or helper-data blob is malformed."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
