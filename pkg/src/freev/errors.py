"""Exception hierarchy shared by all freev modules."""


class FreeVError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(FreeVError, ValueError):
    """Invalid spectral, mel or loss configuration."""


class ShapeError(FreeVError, ValueError):
    """Array shapes disagree with each other or with the configuration."""


class DomainError(FreeVError, ValueError):
    """A spectrogram is in the wrong (linear/log) domain for the operation."""


class SignalError(FreeVError, ValueError):
    """Empty, too short, non-finite or mismatched-rate signal."""


class ConvergenceError(FreeVError, RuntimeError):
    """An iterative solver did not converge within its iteration budget."""

    def __init__(self, message, frame=None):
        super().__init__(message)
        self.frame = frame


class FormatError(FreeVError, ValueError):
    """Malformed FVT1/FVW1 file or report."""
