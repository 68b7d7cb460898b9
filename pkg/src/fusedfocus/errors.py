"""Exception hierarchy shared by the analysis modules."""


class FusedFocusError(Exception):
    """Base class for all package errors."""


class EvaluationError(FusedFocusError):
    """A vector field or switching function was evaluated outside its domain."""


class DomainError(EvaluationError, ValueError):
    """Argument outside the admissible domain (e.g. k at the blow-up boundary)."""


class NoSliding(FusedFocusError):
    """No sliding multiplier exists at the queried manifold point."""


class DegenerateContact(FusedFocusError):
    """Both one-sided fields are tangent to the manifold at the same point."""


class NotInSlidingRegion(FusedFocusError):
    """Sliding flow requested at a point outside every sliding region."""


class NotOnManifold(FusedFocusError, ValueError):
    """Point is not on the splitting manifold within tolerance."""


class ZenoSuspected(FusedFocusError):
    """Event accumulation or step-size collapse; carries the partial trajectory."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class NoReturn(FusedFocusError):
    """The Poincare section was not reached again within the allowed time."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory


class BracketInvalid(FusedFocusError, ValueError):
    """The displacement map does not change sign on the given bracket."""


class NotConverged(FusedFocusError):
    """An iterative solve stopped before reaching its tolerance."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class NoRootInDomain(FusedFocusError):
    """A root exists only outside the admissible domain."""


class NonHyperbolic(FusedFocusError):
    """The critical manifold loses normal hyperbolicity (epsilon = 0)."""


class NotFound(FusedFocusError):
    """A bifurcation search found no crossing in the scanned range."""


class ConfigError(FusedFocusError, ValueError):
    """Malformed or inconsistent run configuration."""


class OracleMismatch(FusedFocusError):
    """A baked-in constant disagrees with its independent numerical oracle."""
