"""Exception hierarchy shared by all modules."""


class GraphFKIError(Exception):
    """Base class for every error raised by the package."""


# graph construction / lookup
class GraphError(GraphFKIError, ValueError):
    pass


class DuplicateEdge(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class NonPositiveWeight(GraphError):
    pass


class NonPositiveMeasure(GraphError):
    pass


class Disconnected(GraphError):
    pass


class ThetaOutOfRange(GraphError):
    pass


class UnknownVertex(GraphError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class EmptyRadii(GraphError):
    pass


class BadParams(GraphError):
    pass


# operator
class EmptySubset(GraphFKIError, ValueError):
    pass


class NegativeTime(GraphFKIError, ValueError):
    pass


class SingularShift(GraphFKIError, ValueError):
    pass


class EigensolverFailure(GraphFKIError, RuntimeError):
    pass


class NotAPath(GraphFKIError, ValueError):
    pass


# process / estimator
class NonPositiveHorizon(GraphFKIError, ValueError):
    pass


class CensoredTrajectory(GraphFKIError, ValueError):
    pass


class CensoredBeforeExit(CensoredTrajectory):
    pass


class StartOutsideSubset(GraphFKIError, ValueError):
    pass


# inequality checks
class PotentialOrderViolated(GraphFKIError, ValueError):
    def __init__(self, vertex, v1, v2):
        self.vertex = vertex
        super().__init__(
            f"v1 < v2 at vertex {vertex}: v1={v1!r}, v2={v2!r}")


class BadExhaustion(GraphFKIError, ValueError):
    pass


class NegativePotential(GraphFKIError, ValueError):
    pass


# I/O
class ConfigInvalid(GraphFKIError, ValueError):
    pass


class ParseError(GraphFKIError, ValueError):
    """Malformed graph file. ``kind`` names the failed rule."""

    def __init__(self, kind, message, field=None):
        self.kind = kind
        self.field = field
        loc = f" [{field}]" if field else ""
        super().__init__(f"{kind}{loc}: {message}")
