"""Exception hierarchy shared by all subpackages."""


class HalfLieError(Exception):
    """Base class for every error raised by this library."""


# jets
class SourceTargetMismatch(HalfLieError):
    pass


class OrderMismatch(HalfLieError):
    pass


class BaseMismatch(HalfLieError):
    pass


class SingularLinearPart(HalfLieError):
    pass


class StepTooSmall(HalfLieError):
    pass


# groups
class ModelMismatch(HalfLieError):
    pass


class NotADiffeomorphism(HalfLieError):
    pass


class NotInvertible(HalfLieError):
    pass


class FlowDiverged(HalfLieError):
    pass


class StepRejected(HalfLieError):
    pass


class InsufficientModes(HalfLieError):
    pass


# riemannian / bvp
class SingularInertia(HalfLieError):
    pass


class BlowUp(HalfLieError):
    pass


class ChartBoundary(HalfLieError):
    pass


class NotConverged(HalfLieError):
    def __init__(self, message, solution=None):
        super().__init__(message)
        self.solution = solution


# curvature
class DomainBoundary(HalfLieError):
    pass


class DegeneratePlane(HalfLieError):
    pass


# harness
class ConfigError(HalfLieError):
    pass
