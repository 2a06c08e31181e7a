"""Exception hierarchy for kslab."""


class KSLabError(Exception):
    """Base class for all kslab errors."""


class ValidationError(KSLabError, ValueError):
    """Bad input or violated precondition."""


class InvalidScaleError(ValidationError):
    pass


class OutOfRangeError(ValidationError):
    pass


class SpecViolationError(ValidationError):
    pass


class CoverageError(ValidationError):
    pass


class OrbitDegeneracyError(ValidationError):
    pass


class FitRangeError(ValidationError):
    pass


class ConfigError(ValidationError):
    """Config schema violation; ``path`` names the offending key."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class NumericalError(KSLabError, ArithmeticError):
    """A numerical procedure could not reach its tolerance."""


class NumericalFailure(NumericalError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BoundViolationError(NumericalError):
    pass


class TruncationError(NumericalError):
    pass


class ResolutionError(NumericalError):
    pass


class DegenerateSampleError(NumericalError):
    pass


class PrecisionError(NumericalError):
    """Continued-fraction expansion ran out of input precision."""

    def __init__(self, message, last_safe_k):
        super().__init__(message)
        self.last_safe_k = last_safe_k


class CapError(NumericalError):
    """Integer sequence exceeded its cap; ``partial`` holds what was built."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial
