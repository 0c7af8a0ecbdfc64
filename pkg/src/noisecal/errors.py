"""Exception types shared across the package.

Validation errors signal malformed inputs (bad parameters, files, flags)
and map to CLI exit code 2.  Numeric errors signal assumption violations
or unattainable numerical requests and map to exit code 3.
"""


class ValidationError(ValueError):
    """Invalid parameter, configuration, or file content."""


class NumericError(RuntimeError):
    """Numerical failure or violated model assumption."""


class ResolutionError(NumericError):
    """Requested grid cannot resolve the model's spectral features."""


class AssumptionViolation(NumericError):
    """Data contradicts an assumption a calibration scheme relies on."""


class EstimationCollapse(NumericError):
    """Parameter estimation produced a non-physical result."""
