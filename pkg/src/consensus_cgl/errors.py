"""Exception hierarchy shared by all modules."""


class CglError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(CglError, ValueError):
    pass


class NonSquare(CglError, ValueError):
    pass


# Alias kept so both spellings used across modules resolve to one class.
NotSquare = NonSquare


class NonFinite(CglError, ValueError):
    pass


class DimensionMismatch(CglError, ValueError):
    pass


class UnstableRate(CglError, ValueError):
    """A diffusion rate is not strictly below ``1 / lambda_max``."""


class InvalidSigma(CglError, ValueError):
    pass


class EmptyFilter(CglError, ValueError):
    pass


class NonPositiveRate(CglError, ValueError):
    pass


class DegenerateCovariance(CglError, ArithmeticError):
    pass


class Infeasible(CglError):
    pass


class NoFeasibleEpsilon(Infeasible):
    pass


class MaxItersExceeded(CglError):
    pass


class AllCandidatesDegenerate(CglError, ArithmeticError):
    pass


class SingularInput(CglError, ArithmeticError):
    pass


class ZeroTrueNorm(CglError, ValueError):
    pass


class ZeroEstimateTrace(CglError, ValueError):
    pass


class EmptyList(CglError, ValueError):
    pass


class ParseError(CglError, ValueError):
    def __init__(self, message, line=None, column=None):
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaError(CglError, ValueError):
    pass
