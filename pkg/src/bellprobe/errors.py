"""Exception hierarchy.

Every error carries a ``category`` code; the CLI writes it to ``errors.csv``
and maps it to a process exit status.
"""


class BellProbeError(ValueError):
    category = "CONFIG"


class ParameterError(BellProbeError):
    """Invalid physical or protocol parameters (bad amplitudes, T2 > 2*T1, ...)."""

    category = "CONFIG"


class DegenerateTimeError(BellProbeError):
    """The chosen evolution time carries no usable information."""

    category = "DEGENERATE_TIME"


class DegenerateBranchError(BellProbeError):
    category = "DEGENERATE_TIME"


class ModelViolationError(BellProbeError):
    """Measured statistics are incompatible with the assumed dynamics."""

    category = "MODEL_VIOLATION"


class InconsistencyError(ModelViolationError):
    pass


class OutOfRangeError(ModelViolationError):
    pass


class ConditioningError(BellProbeError):
    category = "CONDITIONING"


class NoSignalError(BellProbeError):
    category = "NO_SIGNAL"


EXIT_CODES = {
    "CONFIG": 2,
    "DEGENERATE_TIME": 3,
    "MODEL_VIOLATION": 4,
    "CONDITIONING": 5,
    "NO_SIGNAL": 6,
}
