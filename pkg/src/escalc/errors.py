"""Exception hierarchy.

Every computational failure carries a stable ``code`` string (the class
name) so the CLI can emit it as a structured JSON error object.
"""


class EscalcError(Exception):
    """Base class for all library errors."""

    @property
    def code(self):
        return type(self).__name__

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class SpecError(EscalcError, ValueError):
    """Invalid production-function parameters or malformed spec JSON."""


class DomainError(EscalcError, ValueError):
    pass


class DimensionError(EscalcError, ValueError):
    pass


class NotDifferentiable(EscalcError):
    pass


class SingularBorderedHessian(EscalcError):
    pass


class DegenerateDenominator(EscalcError):
    pass


class NotLinearHomogeneous(EscalcError):
    pass


class ZeroCrossPartial(EscalcError):
    pass


class ZeroGradient(EscalcError):
    pass


class IsoquantTraceFailure(EscalcError):
    pass


class NoConvergence(EscalcError):
    pass


class SingularQ(EscalcError):
    pass


class ZeroMarginalCost(EscalcError):
    pass


class Unbounded(EscalcError):
    """Profit maximization is degenerate for homogeneous specs of degree >= 1."""


class NotConcaveAtSolution(EscalcError):
    pass


class ZeroNetSupply(EscalcError):
    pass


class ConfigError(EscalcError):
    """Bad command-line configuration (exit status 2)."""


class SecondOrderFail(UserWarning):
    """Critical point found but bordered-Hessian minors do not alternate.

    Issued as a warning: the solution is still returned, flagged.
    """
