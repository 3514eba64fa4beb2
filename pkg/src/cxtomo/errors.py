"""Exception hierarchy.

Validation problems (bad inputs, mismatched grids) derive from
:class:`ValidationError`; numerical breakdowns derive from
:class:`NumericalError`.  The CLI maps the two families to exit codes 2 and 3.
"""


class CxTomoError(Exception):
    """Base class for all package errors."""


class ValidationError(CxTomoError, ValueError):
    pass


class NumericalError(CxTomoError, ArithmeticError):
    pass


class DomainError(ValidationError):
    """An evaluation point lies outside the admissible domain."""


class SingularLambda(ValidationError):
    """|lambda| is too close to 0 for the complexified coefficients."""


class SupportViolation(ValidationError):
    """A density or sinogram row does not vanish where it must."""


class GridMismatch(ValidationError):
    pass


class GridBoundary(ValidationError):
    """A finite-difference stencil leaves the sampled region."""


class TypeHViolation(ValidationError):
    pass


class DegenerateField(NumericalError):
    pass


class NonIntegerWinding(NumericalError):
    pass


class ZeroClusterUnresolved(NumericalError):
    pass


class OnCharacteristic(NumericalError):
    pass


class NonConvergent(NumericalError):
    pass
