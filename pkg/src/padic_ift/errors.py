"""Exception types shared across the package.

Class names are part of the public contract: the CLI surfaces them verbatim.
"""


class PadicIFTError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(PadicIFTError, ValueError):
    """A documented precondition (e.g. ``0 < a < 1 < b``) was violated."""


class PrimeMismatch(PadicIFTError, ValueError):
    pass


class DivisionByZeroAtPrecision(PadicIFTError, ZeroDivisionError):
    pass


class DimensionMismatch(PadicIFTError, ValueError):
    pass


class NotInvertibleAtPrecision(PadicIFTError, ArithmeticError):
    pass


class NormNotContractive(PadicIFTError, ValueError):
    pass


class BallOutsideDomain(PadicIFTError, ValueError):
    pass


class NoContractiveRadius(PadicIFTError, ArithmeticError):
    pass


class TargetOutsideImage(PadicIFTError, ValueError):
    pass


class MaxIterationsExceeded(PadicIFTError, RuntimeError):
    pass


class RadiusTooLarge(PadicIFTError, ValueError):
    pass


class NoUniformContraction(PadicIFTError, ArithmeticError):
    pass


class ParameterOutsideQ(PadicIFTError, ValueError):
    pass


class NoAdmissibleRadii(PadicIFTError, ArithmeticError):
    pass


class SingularAtBase(PadicIFTError, ArithmeticError):
    pass


class NonConvergence(PadicIFTError, RuntimeError):
    pass


class IdentityViolation(PadicIFTError, AssertionError):
    """Two routes to the same polynomial disagreed; indicates an engine bug."""


class ParseError(PadicIFTError, ValueError):
    pass
