"""Exception hierarchy shared by all neutralgeom modules."""


class NeutralGeomError(Exception):
    """Base class for every error raised by this package."""


# jets
class JetError(NeutralGeomError):
    pass


class DivisionByZeroConstantTerm(JetError, ZeroDivisionError):
    pass


class NegativeSqrtConstantTerm(JetError, ValueError):
    pass


class OrderOutOfRange(JetError, IndexError):
    pass


class SamplerDomainError(JetError):
    pass


# linear algebra / geometry
class DegenerateTangentPlane(NeutralGeomError):
    pass


class NotLorentzian(DegenerateTangentPlane):
    pass


class ZeroMeanCurvature(NeutralGeomError):
    pass


class IsometryViolation(NeutralGeomError):
    def __init__(self, message, magnitude=None):
        super().__init__(message)
        self.magnitude = magnitude


class VanishingCurvature(NeutralGeomError):
    pass


# residuals
class IncompleteGrid(NeutralGeomError):
    pass


class KernelPatternViolation(NeutralGeomError):
    pass


# families
class SpecError(NeutralGeomError, ValueError):
    """Malformed family specification (bad field, unparsable expression)."""


class DegenerateH(NeutralGeomError):
    pass


class CurveConstraintViolation(NeutralGeomError):
    def __init__(self, condition, magnitude):
        super().__init__(f"curve constraint {condition} violated (max defect {magnitude:.3e})")
        self.condition = condition
        self.magnitude = magnitude


class RankDeficiency(NeutralGeomError):
    pass


class InconsistentConstraints(RankDeficiency):
    """The normalisation conditions on eta' admit no solution at all."""


class LNotFunctionOfT(NeutralGeomError):
    def __init__(self, magnitude):
        super().__init__(f"invariant L depends on s (max |dL/ds| = {magnitude:.3e})")
        self.magnitude = magnitude


class NoRealRoot(NeutralGeomError):
    """The null condition on eta' has no real solution."""


class BranchAmbiguity(NeutralGeomError):
    pass
