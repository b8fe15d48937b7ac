"""Exception types shared across the package."""


class BeancritError(Exception):
    """Base class for all package errors."""


class ZeroVector(BeancritError):
    """Gauge derivative requested at (numerically) zero argument."""


class DegenerateNormal(BeancritError):
    """Boundary tangent vanished; normal direction undefined."""


class OutsideDomain(BeancritError):
    """Point lies outside the closed domain beyond tolerance."""


class CutExceeded(BeancritError):
    """Ray parameter beyond the cut length of its ray."""


class InvalidField(BeancritError):
    """Scalar field inconsistent with its grid (shape, mask, NaN)."""


class NotLipschitz(BeancritError):
    """Input field violates the gauge Lipschitz bound beyond slack."""


class SingularCell(BeancritError):
    """Cell with a non-unique boundary projection where a unique one is required."""


class InfeasibleCompetitor(BeancritError):
    """Competitor field violates the gradient constraint after scaling."""


class NonmonotonePiece(BeancritError):
    """Drive piece is not monotone on its interval."""


class EmptyFront(BeancritError):
    """Requested penetration front level is not attained inside the domain."""


class NonConvergence(BeancritError):
    """Iterative minimization stopped before meeting its tolerance."""


class BoundaryViolation(BeancritError):
    """Field does not vanish on cells outside the domain interior."""


class ConfigError(BeancritError):
    """Scenario configuration is malformed; message names the offending key."""


class FormatError(BeancritError):
    """Delimited input file is malformed; message names the offending column."""


class ShapeMismatch(BeancritError):
    """Loaded field shape differs from the configured grid shape."""
