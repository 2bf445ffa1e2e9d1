class TTSCoreError(ValueError):
    """Base class for every error raised by the library."""


class ConfigError(TTSCoreError):
    pass


class TextFrontendError(TTSCoreError):
    pass


class UnsupportedCharacterError(TextFrontendError):
    def __init__(self, char: str, position: int):
        self.char = char
        self.position = position
        super().__init__(f"unsupported character {char!r} at position {position}")


class AudioFormatError(TTSCoreError):
    pass


class FeatureError(TTSCoreError):
    pass


class AlignmentError(TTSCoreError):
    pass


class NoAdmissibleAlignmentError(AlignmentError):
    def __init__(self, n_frames: int, min_frames: int):
        self.n_frames = n_frames
        self.min_frames = min_frames
        super().__init__(
            f"no admissible alignment: {n_frames} frames, at least {min_frames} required"
        )


class InvalidPathError(AlignmentError):
    pass


class UpsampleError(TTSCoreError):
    pass


class LossError(TTSCoreError):
    pass


class ArtifactFormatError(TTSCoreError):
    pass


class CorpusError(TTSCoreError):
    def __init__(self, message: str, utt_id: str | None = None):
        self.utt_id = utt_id
        if utt_id is not None:
            message = f"[{utt_id}] {message}"
        super().__init__(message)


__all__ = [
    "TTSCoreError",
    "ConfigError",
    "TextFrontendError",
    "UnsupportedCharacterError",
    "AudioFormatError",
    "FeatureError",
    "AlignmentError",
    "NoAdmissibleAlignmentError",
    "InvalidPathError",
    "UpsampleError",
    "LossError",
    "ArtifactFormatError",
    "CorpusError",
]
