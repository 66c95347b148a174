"""Exception hierarchy shared across the package."""


class SingerIdError(Exception):
    """Base class for all errors raised by singerid."""


class AudioReadError(SingerIdError, OSError):
    """The file could not be opened or parsed as RIFF WAV."""


class UnsupportedEncodingError(SingerIdError, ValueError):
    """The WAV sample format is not PCM16 or IEEE float32."""


class EmptyAudioError(SingerIdError, ValueError):
    """The audio contains no samples."""


class SignalTooShortError(SingerIdError, ValueError):
    """The signal is too short for the requested transform."""


class ConvergenceError(SingerIdError, RuntimeError):
    """An iterative solver hit its iteration cap.

    The ``diagnostics`` mapping carries solver state at the point of failure.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConfigError(SingerIdError, ValueError):
    """Invalid pipeline configuration."""


class StageError(SingerIdError, RuntimeError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the error."""

    def __init__(self, stage, cause):
        super().__init__(f"{stage} stage failed: {type(cause).__name__}: {cause}")
        self.stage = stage
