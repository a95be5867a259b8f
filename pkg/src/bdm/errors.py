"""Exception hierarchy shared by all modules."""


class BdmError(Exception):
    """Base class for library errors."""


class NonZeroOrder(BdmError):
    pass


class BadHbar(BdmError):
    pass


class PositiveOrder(BdmError):
    pass


class BadOrder(BdmError):
    pass


class SplitFailure(BdmError):
    pass


class SingularResolvent(BdmError):
    pass


class PositiveClass(BdmError):
    pass


class GapViolation(BdmError):
    """Singular values fall inside the guard band [tol, 10 tol]."""


class EllipticityFailure(BdmError):
    def __init__(self, message, frequency=None):
        super().__init__(message)
        self.frequency = frequency


class NonIntegrable(BdmError):
    pass


class GridMismatch(BdmError):
    pass


class DegreeMismatch(BdmError):
    pass


class NotIdempotent(BdmError):
    pass


class ConfigError(BdmError):
    pass


class NumericalFailure(BdmError):
    def __init__(self, message, check=None):
        super().__init__(message)
        self.check = check
