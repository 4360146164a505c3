from typing import Optional


class ConfigurationError(ValueError):
    ...


class ShapeError(ValueError):
    ...


class DegenerateInputError(ValueError):
    ...


class UnsupportedConfigurationError(ValueError):
    ...


class IngestionError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None) -> None:
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
