"""Exception hierarchy for lexisbayes."""


class LexisError(Exception):
    """Base class for all package errors."""


class DimensionError(LexisError, ValueError):
    """Lattice extent or array shape is unusable."""


class KnotOutOfBoundsError(LexisError, IndexError):
    pass


class DataValidationError(LexisError, ValueError):
    """Mortality data violates an invariant (negative counts, deaths without exposure, ...)."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class OffsetError(LexisError, ValueError):
    """The baseline rate cannot be computed (no exposure or no deaths)."""


class NonFinitePotentialError(LexisError, ArithmeticError):
    """A potential or log-density evaluated to a non-finite value or left the safe log-rate range."""


class SamplerError(LexisError, RuntimeError):
    pass


class DegenerateTraceError(LexisError, ValueError):
    """A chain passed to the PSRF has zero within-chain variance."""


class HmdFormatError(LexisError, ValueError):
    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class CoverageGapError(LexisError, ValueError):
    """Requested (year, age) cells are absent or missing in the source tables."""

    def __init__(self, missing):
        self.missing = list(missing)
        shown = ", ".join(f"({y}, {a})" for y, a in self.missing[:10])
        more = "" if len(self.missing) <= 10 else f" ... and {len(self.missing) - 10} more"
        super().__init__(f"{len(self.missing)} missing (year, age) cells: {shown}{more}")


class AggregationError(LexisError, ValueError):
    pass
