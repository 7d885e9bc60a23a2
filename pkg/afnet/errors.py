# Error types shared by every afnet module
from typing import Optional


class AfnetError(ValueError):
    """Base class for all afnet errors"""


class ShapeError(AfnetError):
    """Tensor or layer shapes do not line up"""


class ValidationError(AfnetError):
    """An argument violates a documented precondition"""


class NondifferentiableError(ValidationError):
    """Finite differences requested too close to an activation kink"""


class ConfigError(ValidationError):
    """Experiment config is invalid"""

    def __init__(self, message: str, field: Optional[str] = None):
        self.field = field
        if field:
            message = f"{field}: {message}"
        super().__init__(message)


class DatasetError(AfnetError):
    """Dataset file could not be ingested"""

    def __init__(
        self,
        message: str,
        path: Optional[str] = None,
        row: Optional[int] = None,
        column: Optional[str] = None,
    ):
        self.path = path
        self.row = row
        self.column = column

        location = []
        if path:
            location.append(str(path))
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column '{column}'")

        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
