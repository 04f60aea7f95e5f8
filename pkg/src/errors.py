"""
Exception hierarchy for Rabi Semiclassical Lab

Numeric failures map to CLI exit status 3, configuration errors to 2.
"""


class RabiLabError(Exception):
    """Base class for every error raised by the lab"""


# ========== NUMERIC FAILURES ==========


class NumericFailure(RabiLabError):
    """A cutoff, truncation or integrator limit was hit"""


class SeriesNotConverged(NumericFailure):
    """Series tail bound not met within max_terms"""


class SpecialFunctionOverflow(NumericFailure):
    """Intermediate values left the representable range"""


class CutoffInsufficient(NumericFailure):
    """Dropped harmonics or normal-ordered terms exceed the tail tolerance"""


class TruncationTooSmall(NumericFailure):
    """Fock cutoff too small for the requested displacement or state"""


class StepLimitExceeded(NumericFailure):
    """Norm or local-error tolerance unreachable within max_step_halvings"""


class DegenerateFit(NumericFailure):
    """Log-log fit impossible (underflow or too few points)"""


# ========== ARGUMENT ERRORS ==========


class AlphaZero(RabiLabError, ValueError):
    """Displaced-basis elements are undefined at alpha = 0; use the Fock path"""


class DimensionMismatch(RabiLabError, ValueError):
    """Operands have inconsistent shapes"""


# ========== CONFIGURATION ERRORS ==========


class ConfigError(RabiLabError):
    """Run configuration could not be loaded"""


class ConfigParseError(ConfigError):
    """Malformed line or unknown key"""


class ConfigValidationError(ConfigError):
    """Well-formed config violating a declared invariant"""
