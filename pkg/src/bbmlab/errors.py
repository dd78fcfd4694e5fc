"""Exception hierarchy for bbmlab."""


class BBMLabError(Exception):
    pass


class ConfigurationError(BBMLabError, ValueError):
    """Invalid parameters or configuration values.

    ``path`` names the offending config field when raised during config loading.
    """

    def __init__(self, message, path=None):
        self.path = path
        self.message = message
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class NumericalDataError(BBMLabError, ValueError):
    pass


class MultiplierDomainError(BBMLabError, ValueError):
    pass


class OutOfScopeError(BBMLabError, ValueError):
    pass


class EmptyInputError(BBMLabError, ValueError):
    pass


class InputError(BBMLabError, ValueError):
    pass


class InsufficientDataError(BBMLabError, ValueError):
    pass


class InterpolationError(BBMLabError, ValueError):
    pass


class UnsupportedModelError(BBMLabError, ValueError):
    pass


class BlowUpError(BBMLabError, FloatingPointError):
    """Solver produced non-finite values. ``time`` is the last time reached."""

    def __init__(self, message, time):
        self.time = time
        super().__init__(f"{message} (t={time:.6g})")
