"""Exception types raised across the package."""


class ParameterError(ValueError):
    """An argument is outside the documented domain of an operation."""


class InstanceParseError(ValueError):
    """Instance text could not be decoded or failed validation.

    ``location`` names the offending key or element (for example
    ``"edges[3]"``) when it can be pinned down.
    """

    def __init__(self, message, location=None):
        self.location = location
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)


class MonotonicityError(RuntimeError):
    """The allocation was found to be non-monotone in a buyer's own bid."""


class SizeGuardError(RuntimeError):
    """A brute-force routine refused an input that would blow up."""


class ResampleRequired(ValueError):
    """Random draws collided; the caller should redraw them."""


class UndefinedRatioError(ArithmeticError):
    """The optimum is zero, so an approximation ratio is meaningless."""
