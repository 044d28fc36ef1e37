"""Exception hierarchy shared across the package."""


class QuditLabError(Exception):
    """Base class for all library errors."""


class ConfigError(QuditLabError, ValueError):
    """Invalid user-supplied configuration or arguments."""


class NumericalError(QuditLabError, ArithmeticError):
    """A numerical contract was violated during a computation."""


class DimensionMismatch(QuditLabError, ValueError):
    pass


class NonHermitianInput(NumericalError):
    pass


class NotPSD(NumericalError):
    pass


class NonUnitTrace(NumericalError):
    pass


class DegenerateErrorBranch(NumericalError):
    """An error operator annihilates the state, so its branch cannot be normalized."""


class DimensionCapExceeded(QuditLabError, MemoryError):
    pass


class EmptyEncodingSupport(NumericalError):
    pass


class DegenerateSeries(NumericalError):
    pass
