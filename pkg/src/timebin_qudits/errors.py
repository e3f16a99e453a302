"""Exception hierarchy. Every error carries a stable ``code`` used in CLI error JSON."""


class QuditSimError(Exception):
    code = "error"

    def __init__(self, message, **context):
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self):
        return {"code": self.code, "message": self.message, "context": self.context}


class InvalidModeError(QuditSimError, ValueError):
    code = "invalid_mode"


class GridMismatchError(QuditSimError, ValueError):
    code = "grid_mismatch"


class InvalidGridError(QuditSimError, ValueError):
    code = "invalid_grid"


class InvalidElementError(QuditSimError, ValueError):
    code = "invalid_element"


class InvalidRoutingError(QuditSimError, RuntimeError):
    code = "invalid_routing"


class DegenerateRoutingError(QuditSimError, RuntimeError):
    code = "degenerate_routing"


class UnsupportedDimensionError(QuditSimError, ValueError):
    code = "unsupported_dimension"


class ComplexityError(QuditSimError, RuntimeError):
    code = "complexity"


class InsufficientDataError(QuditSimError, ValueError):
    code = "insufficient_data"


class ShapeError(QuditSimError, ValueError):
    code = "shape"


class DomainError(QuditSimError, ValueError):
    code = "domain"


class ConfigError(QuditSimError, ValueError):
    code = "config"
