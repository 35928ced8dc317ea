"""Exception types raised across the package."""


class AnyonQISMError(Exception):
    """Base class for all errors raised by anyonqism."""


class NonUnimodularEntry(AnyonQISMError, ValueError):
    pass


class SymmetryConflict(AnyonQISMError, ValueError):
    pass


class DimensionMismatch(AnyonQISMError, ValueError):
    pass


class SiteOutOfRange(AnyonQISMError, IndexError):
    pass


class NoAuxiliaryFactor(AnyonQISMError, ValueError):
    pass


class ZeroEta(AnyonQISMError, ValueError):
    pass


class NonUnimodularQ(AnyonQISMError, ValueError):
    pass


class SingularDenominator(AnyonQISMError, ZeroDivisionError):
    pass


class GradingMismatch(AnyonQISMError, ValueError):
    pass


class ResourceLimit(AnyonQISMError, MemoryError):
    """Requested Hilbert space exceeds the configured dimension cap."""


class SingularShift(AnyonQISMError, ArithmeticError):
    """tau(0) is too ill-conditioned to invert."""


class ConvergenceFailure(AnyonQISMError, ArithmeticError):
    pass


class PoleAtRoot(AnyonQISMError, ZeroDivisionError):
    pass


class PoleAtLambda(AnyonQISMError, ZeroDivisionError):
    pass


class NoConvergence(AnyonQISMError, ArithmeticError):
    pass


class DegenerateRoots(AnyonQISMError, ValueError):
    pass
