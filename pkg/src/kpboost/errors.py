"""Exception types shared across the package.

Two failure families map onto the CLI exit codes: contract violations
(bad arguments, impossible requests) exit 1, file/IO problems exit 2.
"""


class KpboostError(Exception):
    """Base class for all package-specific errors."""


class ContractError(KpboostError, ValueError):
    """An operation was invoked outside its documented preconditions."""


class FileFormatError(KpboostError, ValueError):
    """A file exists but its content does not parse (PGM, model, votes, CSV)."""

    def __init__(self, path, message, offset=None):
        self.path = str(path)
        self.offset = offset
        where = f"{self.path}" if offset is None else f"{self.path} (offset {offset})"
        super().__init__(f"{where}: {message}")


class TrainingError(KpboostError, ValueError):
    """Training cannot proceed (single-class input, no usable keypoints)."""
