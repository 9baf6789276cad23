"""Exception hierarchy shared across the package."""


class HmcflowError(Exception):
    """Base class for all package-specific errors."""


class StencilError(HmcflowError):
    """A finite-difference stencil does not fit at the requested node."""


class ConvexityError(HmcflowError):
    """The surface has left the weakly convex class (lambda_1 < -clamp_tol)."""


class DegeneracyError(HmcflowError):
    """Quotient denominator vanished while the numerator stayed finite."""


class StiffnessError(HmcflowError):
    """Stable time step underflowed; the explicit integrator cannot proceed."""


class GridMismatchError(HmcflowError):
    """Two fields that must share a grid do not."""


class InterfaceError(HmcflowError):
    """Level-set extraction produced an unusable contour."""


class CurveError(HmcflowError):
    """A polyline violates the closed-curve preconditions."""


class DomainError(HmcflowError):
    """A point lies outside the domain of a coordinate formula (e.g. z <= 0)."""


class WindowError(HmcflowError):
    """A requested log-coordinate window or localization box is empty."""


class SamplingError(HmcflowError):
    """Pair sampling for a discrete seminorm degenerated."""


class EllipticityError(HmcflowError):
    """Coefficients fail the required ellipticity bound."""


class SingularChartError(HmcflowError):
    """Chart Jacobian is singular at an evaluation point."""


class TransversalityError(HmcflowError):
    """The transverse denominator of the offset-velocity formula vanished."""


class ConfigError(HmcflowError):
    """Run configuration failed validation.

    Carries the full list of violations so a caller can report all problems
    at once rather than one per parse attempt.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
