"""Exception hierarchy shared by all modules."""


class PlasmodesError(Exception):
    """Base class for every error raised by the package."""


class GeometryError(PlasmodesError):
    """Invalid or non-convex geometry."""


class MeshStructureError(GeometryError):
    """Mesh is not a closed two-manifold triangulation."""


class DomainError(PlasmodesError):
    """Evaluation point lies in the wrong region (inside/outside the body)."""


class AssemblyQualityError(PlasmodesError):
    """Assembled operator violates a structural property (e.g. definiteness)."""


class SingularityError(PlasmodesError):
    """Evaluation at a pole or at a coincident source/target pair."""


class ResonanceSingularityError(SingularityError):
    """Contrast value coincides with an operator eigenvalue."""


class ConvergenceError(PlasmodesError):
    """Iterative procedure did not reach its tolerance."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class ConditioningError(PlasmodesError):
    """Linear system too close to singular to be trusted."""


class ConfigurationError(PlasmodesError):
    """Invalid user configuration."""


class FeasibilityError(PlasmodesError):
    """Requested dense problem exceeds the supported size."""
