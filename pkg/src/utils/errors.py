"""
Exception hierarchy for the toolkit.

Every error derives from XxzBellError and from the closest builtin, so callers
can catch either `XxzBellError` or e.g. `ValueError`.
"""


class XxzBellError(Exception):
    """Base class for all toolkit errors."""


class NonUnitVector(XxzBellError, ValueError):
    """A measurement direction is not a unit vector."""


class NotHermitian(XxzBellError, ValueError):
    """An operator expected to be Hermitian is not (within tolerance)."""


class DimensionMismatch(XxzBellError, ValueError):
    """Operator and density matrix act on different numbers of sites."""


class IndexOutOfRange(XxzBellError, IndexError):
    """A site range falls outside the chain."""


class ResourceLimit(XxzBellError, ValueError):
    """Requested size exceeds a hard resource guard."""


class ConvergenceFailure(XxzBellError, RuntimeError):
    """A numerical kernel (SVD, eigensolver) broke down."""


SvdFailure = ConvergenceFailure


class NotCanonicalized(XxzBellError, RuntimeError):
    """An operation needs a canonicalized MPS."""


class DegenerateDominantEigenvalue(XxzBellError, RuntimeError):
    """The two largest transfer-matrix eigenvalues have equal modulus."""


class NotConverged(XxzBellError, RuntimeError):
    """Imaginary-time evolution hit its step cap before reaching tolerance."""

    def __init__(self, message: str, report=None):
        super().__init__(message)
        self.report = report


class InsufficientGrid(XxzBellError, ValueError):
    """Feature detection needs at least three grid points."""


class MalformedCsv(XxzBellError, ValueError):
    """A results CSV does not follow the record schema."""


class ConfigError(XxzBellError, ValueError):
    """A sweep configuration is missing fields or has invalid values."""


class CheckpointError(XxzBellError, ValueError):
    """An MPS checkpoint file is unreadable or has the wrong format."""


class ConsistencyError(XxzBellError, ArithmeticError):
    """An internal numerical consistency check failed."""
