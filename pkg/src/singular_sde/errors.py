"""Exception hierarchy shared by all modules.

The CLI maps :class:`ParameterError` (and subclasses) to exit code 2 and
:class:`NumericalFailure` (and subclasses) to exit code 3.
"""


class ParameterError(ValueError):
    """Invalid or unsupported parameter value."""


class DomainError(ParameterError):
    """Argument outside the domain of a function (e.g. ``x <= 0`` for a drift)."""


class AdmissibilityError(ParameterError):
    """Drift or model parameters violate the admissibility conditions."""


class NumericalFailure(ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class DegenerateInputError(NumericalFailure):
    """Estimator input carries no information (e.g. zero quadratic variation)."""


class ResourceError(MemoryError):
    """Requested computation exceeds the configured memory budget."""
