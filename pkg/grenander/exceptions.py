"""Domain errors.

Every error raised on purpose by the library derives from GrenanderError so
the command line and the HTTP app can report it in one machine-readable shape.
"""
from typing import Any, Optional


class GrenanderError(Exception):
    def __init__(self, message: str, context: Optional[dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = dict(context or {})

    def to_dict(self) -> dict[str, Any]:
        return {"error": type(self).__name__, "message": self.message, "context": self.context}


class ConfigurationError(GrenanderError):
    """Invalid parameters, settings, scenario names or flag combinations."""


class DataError(GrenanderError):
    def __init__(self, message: str, row: Optional[int] = None, context: Optional[dict[str, Any]] = None):
        context = dict(context or {})
        if row is not None:
            context["row"] = row
            message = f"row {row}: {message}"
        super().__init__(message, context)
        self.row = row


class EmptySampleError(DataError):
    def __init__(self):
        super().__init__("empty sample")


class DomainError(GrenanderError):
    """A query outside the range where an estimate is defined."""


class EstimationError(GrenanderError):
    pass


class DerivativeUndefinedError(EstimationError):
    def __init__(self, x0: float):
        super().__init__("derivative undefined", {"x0": x0})


class SurvivalZeroError(EstimationError):
    def __init__(self, x: float):
        super().__init__("survival estimate zero", {"x": x})


class BandwidthMarginError(EstimationError):
    def __init__(self, x: float, bandwidth: float, support: tuple[float, float]):
        super().__init__(
            "bias bandwidth exceeds interior margin",
            {"x": x, "bandwidth": bandwidth, "support": list(support)},
        )


class SingularSystemError(EstimationError):
    pass


class NoFiniteOptimumError(EstimationError):
    pass
