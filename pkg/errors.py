"""Exception hierarchy shared by every module, each class carrying its CLI exit code."""

from typing import Optional


class AlbuminError(Exception):
    """Base class for all errors raised by the application."""

    exit_code = 1


class ConfigError(AlbuminError):
    """Invalid configuration, flags or experiment file."""

    exit_code = 2


class ArtifactError(AlbuminError):
    """Missing checkpoint, run directory or other expected artifact."""

    exit_code = 2

    def __init__(self, message: str, path: Optional[str] = None):
        """Initialize the error with the offending path.

        :param message:
        :param path:
        """
        super().__init__(f"{message}: {path}" if path else message)
        self.path = path


class DataValidationError(AlbuminError):
    """Input data does not satisfy its contract."""

    exit_code = 3


class SchemaError(DataValidationError):
    """Schema definition or column layout is invalid."""


class UniquenessError(DataValidationError):
    """A (patient, day) key appears more than once."""


class SplitError(DataValidationError):
    """A temporal split would produce an empty part."""


class NumericalError(AlbuminError):
    """Non-finite activations inside the model."""

    exit_code = 4

    def __init__(
        self,
        message: str,
        layer: Optional[int] = None,
        node: Optional[str] = None,
        time: Optional[int] = None,
    ):
        """Initialize the error with layer/node/time context.

        :param message:
        :param layer:
        :param node:
        :param time:
        """
        context = f" (layer={layer}, node={node}, time={time})"
        super().__init__(message + context)
        self.layer = layer
        self.node = node
        self.time = time


class TrainingError(AlbuminError):
    """The training objective diverged."""

    exit_code = 4

    def __init__(self, message: str, epoch: int):
        """Initialize the error with the epoch it happened at.

        :param message:
        :param epoch:
        """
        super().__init__(f"{message} at epoch {epoch}")
        self.epoch = epoch
