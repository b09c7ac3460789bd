"""Exception hierarchy shared across the package.

Every error raised by windcurves derives from :class:`WindcurvesError`, so
callers can catch the whole family with one clause.  The concrete classes
are grouped by the subsystem that raises them; the CLI maps them onto exit
codes (I/O = 3, parsing = 4, numerical = 5).
"""


class WindcurvesError(Exception):
    """Base class for all windcurves errors."""


# --- dataset & CSV ---------------------------------------------------------

class IoError(WindcurvesError):
    """A file could not be read or written."""


class ParseError(WindcurvesError):
    """A CSV line could not be parsed; the message names the line number."""


class MissingColumn(ParseError):
    """A required CSV column (or populated field) is absent."""


class EmptyDataset(WindcurvesError):
    """A dataset with zero rows where at least one row is required."""


class UnknownVariable(WindcurvesError):
    """A variable name outside the known environmental set."""


class DuplicateVariable(WindcurvesError):
    """The same variable was requested twice."""


# --- experimental design ---------------------------------------------------

class DimensionUnsupported(WindcurvesError):
    """Sobol dimension outside the supported 1..21 range."""


class ColumnCountMismatch(WindcurvesError):
    """A unit-cube matrix does not have one column per design variable."""


# --- atmosphere & field data ----------------------------------------------

class TempOutOfRange(WindcurvesError):
    """Temperature outside the validity range of the vapor-pressure fit."""


class NonphysicalResult(WindcurvesError):
    """A physical quantity came out non-positive from inconsistent inputs."""


class SeriesTooShort(WindcurvesError):
    """A time series shorter than one aggregation window."""


class EmptyOverlap(WindcurvesError):
    """Two time series share no common span after joining."""


# --- turbine oracle --------------------------------------------------------

class MissingDensity(WindcurvesError):
    """An environmental sample without air density where one is required."""


# --- Gaussian process ------------------------------------------------------

class DimensionMismatch(WindcurvesError):
    """Input dimensionality inconsistent with the model or hyperparameters."""


class CholeskyFailure(WindcurvesError):
    """Gram matrix not positive definite even after jitter escalation."""


class ConstantColumn(WindcurvesError):
    """A training input column with zero variance; names the column."""


# --- nonlinear least squares ----------------------------------------------

class SingularJacobian(WindcurvesError):
    """The damped normal equations became unsolvable."""


# --- evaluation ------------------------------------------------------------

class LengthMismatch(WindcurvesError):
    """Two vectors that must be conformable are not."""


class NonpositiveReference(WindcurvesError):
    """NRMSE reference value must be strictly positive."""


class TooFewRows(WindcurvesError):
    """Fewer data rows than the requested fold count (or model minimum)."""


class YawOutOfRange(WindcurvesError):
    """Yaw angle outside [0, 90) where the tangent ratio is defined."""


class InvalidDensityOrder(WindcurvesError):
    """Density bounds violating 0 < rho_min <= rho_max."""
