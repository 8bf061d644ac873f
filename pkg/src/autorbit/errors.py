"""Exception types shared across the library."""


class AutorbitError(Exception):
    """Base class for all library-specific failures."""


class UnsupportedDerivativeOrder(AutorbitError):
    """Derivative order above the supported closed-form ladder (k > 6)."""


class ZeroLeadingCoefficient(AutorbitError):
    """Requested partial sum has a vanishing leading coefficient."""


class EvaluationOverflow(AutorbitError):
    """log-magnitude of the function itself is not representable."""


class DegenerateFit(AutorbitError):
    """Growth fit is degenerate (polynomial-like data)."""


class NoSafeRadius(AutorbitError):
    """No contour radius in the search window clears the boundary margin."""


class AmbiguousCount(AutorbitError):
    """Argument-principle count did not round cleanly to an integer."""


class InconsistentMoments(AutorbitError):
    """Recovered roots fail to reproduce the input power sums."""


class PolishDiverged(AutorbitError):
    """Newton polish left the convergence basin for a recovered root."""


class CriticalOrbitPoint(AutorbitError):
    """Orbit point is critical (multiple or |f'| ~ 0) where simplicity is required."""


class OrbitIncomplete(AutorbitError):
    """Fewer orbit points recovered than the algebraic count requires."""


class OrderTooHigh(AutorbitError):
    """Function order outside the admissible range of the identity."""


class TiedModuli(AutorbitError):
    """Jensen cut radius ties with the modulus of an included orbit point."""


class NearPole(AutorbitError):
    """Closed-form evaluation point too close to a pole of the formula."""


class BranchTrackingFailed(AutorbitError):
    """Continuous branch tracking did not land on an integer shift."""


class LNearOne(AutorbitError):
    """Reconstruction denominator L - 1 is numerically zero."""


class NoneFound(AutorbitError):
    """Search produced no admissible radii."""
