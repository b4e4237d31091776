"""Exception hierarchy shared by the library and the CLI."""


class SplsimError(Exception):
    """Base class for all errors raised by splsim."""


class ModelError(SplsimError, ValueError):
    """A feature model, product or t-set violates a structural invariant."""


class ParseError(ModelError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InconsistentModelError(SplsimError):
    """The model admits no valid product."""


class ContradictoryAssumptionsError(ModelError):
    """Assumptions name the same feature with both polarities."""


class SuiteMismatchError(ModelError):
    """A suite does not fit the model (width or validity)."""

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class EnumerationBudgetExceeded(SplsimError):
    """Exact enumeration would exceed the configured budget."""


class SamplingStalledError(SplsimError):
    """Rejection sampling found too few valid t-sets."""
