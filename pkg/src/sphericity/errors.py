"""Exception hierarchy shared across the package."""


class SphericityError(Exception):
    """Base class for all errors raised by this package."""


class NonFiniteInput(SphericityError, ValueError):
    pass


class SingularGram(SphericityError, ArithmeticError):
    """The companion Gram matrix is not numerically positive definite."""


class MissingEigenvalues(SphericityError, ValueError):
    pass


class ZeroTrace(SphericityError, ArithmeticError):
    pass


class SampleTooSmall(SphericityError, ValueError):
    pass


class DegenerateT1(SphericityError, ArithmeticError):
    pass


class KindMismatch(SphericityError, ValueError):
    pass


class NonPositiveDiagonal(SphericityError, ValueError):
    pass


class PoleOnContour(SphericityError, ValueError):
    """The quadrature contour violates the radius constraints of the integrand."""


class NonVanishingImaginaryPart(SphericityError, ArithmeticError):
    pass


class PlanParseError(SphericityError, ValueError):
    pass


class DataParseError(SphericityError, ValueError):
    pass
