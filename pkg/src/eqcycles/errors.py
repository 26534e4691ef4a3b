"""Exception and warning types shared across the package."""


class AnalysisError(Exception):
    """Base class for all analysis failures."""


class RequiresS2(AnalysisError):
    """|s2| <= 1: the circle at infinity carries equilibria and the
    classification machinery does not apply."""


class ZeroP(AnalysisError):
    """p1 = p2 = 0: the linear-in-r structure of the equilibrium system
    degenerates."""


class ZeroP2(AnalysisError):
    """p2 = 0: the origin is not monodromic and the scalar reduction of the
    angular equation is undefined.  Use direct integration (eqcycles.flow)
    instead."""


class OnSingularSet(AnalysisError):
    """The requested point lies on {theta' = 0}, where the scalar reduction
    has a pole."""


class NotAnEquilibrium(AnalysisError):
    """classify_equilibrium was handed a state whose field residual exceeds
    the equilibrium tolerance."""


class StepFailure(AnalysisError):
    """The adaptive integrator underflowed its step size."""


class NoReturn(AnalysisError):
    """The trajectory reached an equilibrium, blew up, or ran out of time
    before completing a full turn around the origin."""


class SectionTangency(AnalysisError):
    """The Poincare section is tangent to the flow at the requested point."""


class NoBracket(AnalysisError):
    """The displacement map has no sign change on the supplied bracket."""


class NotOnStratum(AnalysisError):
    """The transversal-polygon construction requires Q(p1,p2) = 0 (within
    tolerance) together with p2*s2 < 0 and |s2| > 1."""


class TransversalityFailed(AnalysisError):
    """No candidate ray produced a polygon with strictly positive
    transversality margin on every segment."""


class ValidityWarning(UserWarning):
    """Emitted when an operation runs outside the hypotheses backing its
    classification results (n <= 3, or s1 = 0)."""
