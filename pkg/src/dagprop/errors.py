"""Exception hierarchy shared across the package."""


class DagPropError(Exception):
    """Base class for all errors raised by dagprop."""


class TopologyError(DagPropError, ValueError):
    pass


class CyclicOrBackwardEdge(TopologyError):
    pass


class DeadLayer(TopologyError):
    pass


class CodeCutViolation(TopologyError):
    pass


class CodeDimension(TopologyError):
    pass


class DimensionMismatch(DagPropError, ValueError):
    pass


class KeyMismatch(DagPropError, KeyError):
    pass


class TraceMismatch(DagPropError, ValueError):
    pass


class NonFiniteInput(DagPropError, ValueError):
    pass


class NonFiniteValue(DagPropError, FloatingPointError):
    pass


class NonFiniteUpdate(DagPropError, FloatingPointError):
    pass


class DomainError(DagPropError, ValueError):
    pass


class InsufficientData(DagPropError):
    pass


class UnboundedRatio(DagPropError):
    pass


class ShapeMismatch(DagPropError, ValueError):
    pass


class DegenerateReference(DagPropError, ValueError):
    pass


class TooSmall(DagPropError, ValueError):
    pass


class MalformedHeader(DagPropError, ValueError):
    pass


class InconsistentDimensions(DagPropError, ValueError):
    pass


class MaxvalZero(DagPropError, ValueError):
    pass


class CountTooLarge(DagPropError, ValueError):
    pass


class ConfigError(DagPropError, ValueError):
    pass


class TooLargeForFiniteDifference(DagPropError, ValueError):
    pass
