"""Exception types shared across the package."""


class KerrGateError(Exception):
    """Base class for all errors raised by kerrgate."""


class DomainError(KerrGateError, ValueError):
    """Arguments outside the domain where a quantity is defined."""


class NumericalOverflowError(KerrGateError, ArithmeticError):
    """A series term or integrand stopped being finite."""

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class NonFiniteIntegrandError(KerrGateError, ArithmeticError):
    """An integrand sample was NaN or infinite; carries where it happened."""

    def __init__(self, message: str, coordinates: tuple = ()):
        super().__init__(message)
        self.coordinates = coordinates


class GridTooSmallError(DomainError):
    """The sampled amplitude is still significant on the grid boundary."""

    def __init__(self, message: str, edge_ratio: float):
        super().__init__(message)
        self.edge_ratio = edge_ratio


class SolverError(DomainError):
    """Root bracketing failed or the target is unreachable."""


class ResourceError(KerrGateError):
    """Requested problem size exceeds the built-in guard."""
