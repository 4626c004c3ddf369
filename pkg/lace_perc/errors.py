"""Exception hierarchy shared by the library and the CLI.

The CLI maps these onto exit codes: validation problems exit 2, resource
guards exit 3.
"""


class LacePercError(Exception):
    """Base class for errors raised by lace_perc."""


class ResourceLimitError(LacePercError):
    """A computation would exceed a configured size guard."""

    def __init__(self, message: str, predicted: int | None = None) -> None:
        super().__init__(message)
        self.predicted = predicted


class TruncationError(LacePercError):
    """An identity check asked for orders its truncation cannot certify."""


class WrapCycleWarning(UserWarning):
    """A torus side is short enough for wrap-around cycles to alter counts."""


class TruncatedSampleWarning(UserWarning):
    """A cluster hit the size cap and was recorded as truncated."""
