"""Exception hierarchy.

Input problems derive from :class:`InputError`, numerical breakdowns from
:class:`NumericalError`; the command line maps them to distinct exit codes.
"""


class MonolevError(Exception):
    """Base class for every error raised by the package."""


class InputError(MonolevError, ValueError):
    """Invalid argument or configuration."""


class NumericalError(MonolevError, ArithmeticError):
    """A flow, inversion or quadrature could not meet its tolerance."""


# measure
class NegativeMass(InputError):
    pass


class EmptyMeasure(InputError):
    pass


class OrderTooHigh(InputError):
    pass


class DomainMismatch(InputError):
    pass


class NotProbability(InputError):
    pass


# transform
class LowerHalfPlane(InputError):
    pass


class EvaluatorUndefined(NumericalError):
    pass


class MassDeficit(NumericalError):
    pass


class NegativeDensityExcess(NumericalError):
    pass


# convolution
class NodeBudgetExceeded(NumericalError):
    pass


# semigroup
class StepFailure(NumericalError):
    """Adaptive integration stalled; ``last`` holds the last accepted state."""

    def __init__(self, msg, last=None, time=None):
        super().__init__(msg)
        self.last = last
        self.time = time


class OutsideDomain(NumericalError):
    pass


class DerivativeUnavailable(InputError):
    pass


class RadiusTooSmall(NumericalError):
    pass


# matrix oracle
class MomentBreakdown(NumericalError):
    pass


class NotCompressible(InputError):
    pass


class SingularResolvent(NumericalError):
    pass


class NoWitnessFound(MonolevError):
    pass


class DimensionCapExceeded(InputError):
    pass


# configuration
class SchemaViolation(InputError):
    def __init__(self, msg, path=()):
        where = "/".join(str(p) for p in path) or "<root>"
        super().__init__(f"{where}: {msg}")
        self.path = tuple(path)
