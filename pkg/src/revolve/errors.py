"""Exception hierarchy shared by every stage of the pipeline."""


class RevolveError(Exception):
    """Base class for all library errors."""


class InvalidArgumentError(RevolveError, ValueError):
    pass


class InsufficientDataError(RevolveError, ValueError):
    pass


class DegenerateInputError(RevolveError, ValueError):
    pass


class NoConvergenceError(RevolveError, RuntimeError):
    pass


class DetectionFailedError(RevolveError, RuntimeError):
    """Turntable never became stable before the frame stream ran out."""


class InvalidStateError(RevolveError, RuntimeError):
    pass


class ConfigError(RevolveError, ValueError):
    pass


class InputError(RevolveError, OSError):
    """Missing or unreadable input data."""
