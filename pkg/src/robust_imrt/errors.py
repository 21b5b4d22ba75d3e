"""Exception hierarchy shared across the toolkit."""


class PlanningError(Exception):
    """Base class for every error raised by robust_imrt."""


# motion / uncertainty
class NegativeMass(PlanningError, ValueError):
    pass


class NotNormalized(PlanningError, ValueError):
    pass


class StateMismatch(PlanningError, ValueError):
    pass


class InfeasibleSet(PlanningError, ValueError):
    pass


class SamplingExhausted(PlanningError, RuntimeError):
    pass


class InvalidUncertaintySet(PlanningError, ValueError):
    pass


# phantom / dose
class GridTooSmall(PlanningError, ValueError):
    pass


class DimensionMismatch(PlanningError, ValueError):
    pass


# evaluation
class EmptyStructure(PlanningError, ValueError):
    pass


# optimizers
class LambdaOutOfRange(PlanningError, ValueError):
    pass


class ObjectiveNonFinite(PlanningError, FloatingPointError):
    pass


class UnknownBenchmark(PlanningError, KeyError):
    pass


# configuration / files
class ParseError(PlanningError, ValueError):
    pass


class SchemaError(PlanningError, ValueError):
    """Configuration violates the schema; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str) -> None:
        super().__init__(f"{key}: {message}")
        self.key = key


class FileFormat(PlanningError, ValueError):
    pass
