"""Exception types shared across abelkit."""


class AbelkitError(Exception):
    """Base class for every error raised by the toolkit."""


class ParseError(AbelkitError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at offset {position})"
        super().__init__(message)


class DomainError(AbelkitError, ArithmeticError):
    """Evaluation left the real domain (ln of non-positive, division by zero, ...)."""


class IndeterminateError(AbelkitError):
    """No sample point could be evaluated."""


class PreconditionError(AbelkitError):
    """A mathematical precondition of an operation is violated."""


class NotProperAbelError(PreconditionError):
    pass


class MixedTypeError(PreconditionError):
    def __init__(self, message, t=None):
        self.t = t
        super().__init__(message)


class ClosureError(PreconditionError):
    pass


class NoMultiplierError(PreconditionError):
    pass


class AccuracyError(AbelkitError):
    """Requested accuracy not attained; ``estimate`` carries the best value found."""

    def __init__(self, message, estimate=None):
        self.estimate = estimate
        super().__init__(message)


class BlowUpError(AbelkitError):
    """Solution escapes to infinity inside ``bracket``."""

    def __init__(self, message, bracket=None):
        self.bracket = bracket
        super().__init__(message)
