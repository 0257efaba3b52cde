"""Exception types shared across the package."""


class YinYangError(Exception):
    """Base class for all package errors."""


class DegenerateSegment(YinYangError, ValueError):
    """Two consecutive curve samples coincide."""


class OpenCurve(YinYangError, ValueError):
    """An operation that needs a closed curve received an open one."""


class SelfIntersecting(YinYangError, ValueError):
    """A polygon boundary crosses itself."""


class SingularityReached(YinYangError, ArithmeticError):
    """The soliton integrator hit a point where tan(u) blows up."""


class ToleranceFailure(YinYangError, ArithmeticError):
    """A computed quantity misses its accuracy target."""


class OutOfRange(YinYangError, ValueError):
    """An argument lies outside the supported domain."""


class QuadratureFailure(YinYangError, ArithmeticError):
    """Adaptive quadrature exceeded its refinement budget."""


class NoRoot(YinYangError, ArithmeticError):
    """A bracketed root search found no sign change."""


class MismatchedGrids(YinYangError, ValueError):
    """Two sampled objects do not share a compatible grid."""


class CurvatureBlowup(YinYangError, ArithmeticError):
    """Discrete curvature left its admissible range during a flow."""


class SelfIntersection(SelfIntersecting):
    """A flowed curve developed a crossing."""


class PositivityLoss(YinYangError, ArithmeticError):
    """The polar-graph radius became non-positive."""


class SigmaViolation(YinYangError, ArithmeticError):
    """The monitored quantity kappa - <X, X_s> went negative."""


class NonConvergence(YinYangError, ArithmeticError):
    """An iteration did not reach its tolerance."""


class BoundViolation(YinYangError, ArithmeticError):
    """A monitored bound failed during a run."""
