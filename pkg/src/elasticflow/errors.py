"""Exception taxonomy shared across the package."""


class ElasticFlowError(Exception):
    """Base class for every error raised by this package."""


class NonRegularCurve(ElasticFlowError):
    """The discrete speed |d(gamma)/dx| is zero, negative or non-finite somewhere."""


class StencilTooWide(ElasticFlowError):
    """The grid is too coarse for the requested derivative order."""


class LengthMismatch(ElasticFlowError):
    """A per-node array does not match the curve's node count."""


class MissingDerivativeOrder(ElasticFlowError):
    """A geometric cache does not carry the requested arclength derivative."""


class NotGeometricallyAdmissible(ElasticFlowError):
    """Initial curve fails the conditions prepare_initial needs."""


class InadmissibleInitial(ElasticFlowError):
    """Initial curve fails the admissibility gate of run_flow."""


class DegenerateBoundary(ElasticFlowError):
    """The y-component of the boundary tangent is below the threshold."""


class SingularMatrix(ElasticFlowError):
    """A linear solve failed; typically signals boundary degeneracy."""


class StabilityViolation(ElasticFlowError):
    """Explicit time step exceeds the fourth-order stability bound."""


class NewtonDiverged(ElasticFlowError):
    """Damped Newton failed to decrease the residual."""


class SingularJacobian(ElasticFlowError):
    """Newton Jacobian is rank deficient."""


class InsufficientRecords(ElasticFlowError):
    """Not enough diagnostics records for an identity check."""


class GridMismatch(ElasticFlowError):
    """States being compared do not share a grid."""


class ParseError(ElasticFlowError):
    """Malformed configuration or data file."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvalidValue(ElasticFlowError):
    """A configuration key carries a value outside its allowed range."""

    def __init__(self, key, message=""):
        super().__init__(f"{key}: {message}" if message else str(key))
        self.key = key
