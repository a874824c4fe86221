"""Exception hierarchy shared by all fracspec modules."""


class FracSpecError(Exception):
    """Base class for every error raised by fracspec."""


class ParameterError(FracSpecError, ValueError):
    """A parameter is outside its admissible range.

    ``field`` names the offending parameter so the CLI can report it.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class PoleError(FracSpecError, ValueError):
    pass


class NumericalError(FracSpecError, ArithmeticError):
    """Base for failures of a numerical method (CLI exit code 2)."""


class NonConvergenceError(NumericalError):
    pass


class InstabilityError(NumericalError):
    pass


class ResolutionError(NumericalError):
    pass


class AliasingError(ResolutionError):
    pass


class BoxEscapeError(NumericalError):
    pass


class GridMismatchError(FracSpecError, ValueError):
    pass


class InsufficientSamplesError(FracSpecError, ValueError):
    pass
