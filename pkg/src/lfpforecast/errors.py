"""Exception hierarchy.

Three families map onto CLI exit codes: configuration problems,
degenerate data, and everything else that goes wrong at run time.
"""


class LFPError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(LFPError, ValueError):
    exit_code = 2


class DegenerateDataError(LFPError, ValueError):
    exit_code = 3


class RuntimeFailure(LFPError, RuntimeError):
    exit_code = 1


# -- data shape / content ---------------------------------------------------

class SeriesTooShort(DegenerateDataError):
    pass


class LengthMismatch(DegenerateDataError):
    pass


class DegenerateSeries(DegenerateDataError):
    pass


class DegenerateWindow(DegenerateDataError):
    pass


class SingleChannelData(DegenerateDataError):
    pass


class FoldTooSmall(DegenerateDataError):
    pass


class InsufficientHistory(DegenerateDataError):
    pass


class SingularDesign(DegenerateDataError):
    pass


class NonFiniteInput(DegenerateDataError):
    pass


# -- numerics ----------------------------------------------------------------

class ShapeMismatch(RuntimeFailure, ValueError):
    pass


class NotScalar(RuntimeFailure, ValueError):
    pass


class NonFiniteError(RuntimeFailure, FloatingPointError):
    """Raised when a NaN/Inf shows up in a forward or backward pass."""

    def __init__(self, op, phase="forward"):
        self.op = op
        self.phase = phase
        super().__init__(f"non-finite value produced by '{op}' during {phase} pass")


class NonFiniteLoss(RuntimeFailure):
    pass
