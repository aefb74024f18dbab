"""Exception types shared across the package."""


class FormatError(ValueError):
    """Malformed or truncated file contents."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigError(ValueError):
    """Configuration does not match the models or contains unknown keys."""


class TrainingError(RuntimeError):
    """Training data cannot produce a model (e.g. only one class present)."""
