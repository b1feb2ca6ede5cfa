"""Exception hierarchy.

The CLI maps these onto exit codes: input/config problems exit 1,
numerical or consistency failures exit 2.
"""


class FreightEJError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(FreightEJError):
    pass


class DataError(FreightEJError):
    """Input data is inconsistent (missing zone, missing factor, bad file)."""


class InvalidGeometryError(FreightEJError):
    pass


class EmptyOverlayError(FreightEJError):
    """A zone does not intersect any cell of the grid."""


class NumericalError(FreightEJError):
    exit_code = 2


class SingularDesignError(NumericalError):
    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class SeparationError(NumericalError):
    """Logistic fit diverges because the outcome is (quasi-)separable."""


class ConsistencyError(NumericalError):
    """A conservation or accounting identity failed beyond tolerance."""


class InsufficientObservationsError(NumericalError):
    """Fewer usable observations than model parameters."""
