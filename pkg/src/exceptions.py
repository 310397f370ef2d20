from typing import Optional


class SpectralCodecError(Exception):
    """
    Base exception for the spectral codec.

    Every error raised on purpose by the library derives from this class,
    so callers can catch the whole family with a single handler.
    """
    pass


class ValidationError(SpectralCodecError):
    """
    Input violates a documented contract.

    Raised for malformed arguments, inconsistent configurations or corrupt
    payloads. The CLI maps this family to exit code 2.
    """
    pass


class AudioIOError(SpectralCodecError):
    """
    A file could not be read or written.

    The CLI maps this family to exit code 1.
    """
    pass


class DspError(ValidationError):
    """Invalid spectral analysis or synthesis request."""
    pass


class QuantizationError(ValidationError):
    """Value, digit or index outside what a quantizer accepts."""
    pass


class CodecModelError(ValidationError):
    """Model cannot be fitted or does not match the data given to it."""
    pass


class ModelFormatError(CodecModelError):
    """
    Serialized model is truncated, corrupt or of an unknown version.

    Attributes:
        offset: Byte offset where decoding failed, when known
    """
    def __init__(self, message: str, offset: Optional[int] = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (offset {offset})"
        super().__init__(message)


class BitstreamError(ValidationError):
    """Token stream header or payload is invalid."""
    pass


class TokenRangeError(ValidationError):
    """
    A token does not fit its codebook.

    Attributes:
        frame: Frame index of the offending token
        codebook: Codebook index of the offending token
        value: The offending token value
        limit: Codebook size the token must stay below
    """
    def __init__(self, frame: int, codebook: int, value: int, limit: int):
        self.frame = frame
        self.codebook = codebook
        self.value = value
        self.limit = limit
        super().__init__(
            f"token {value} at frame {frame}, codebook {codebook} "
            f"is out of range (codebook size {limit})"
        )


class MetricsError(ValidationError):
    """Signals cannot be compared (length, rate or energy mismatch)."""
    pass


class AudioFormatError(ValidationError):
    """Audio file layout is not supported (channels, sample format, rate)."""
    pass


class ConfigError(ValidationError):
    """Environment setting that cannot be parsed."""

    def __init__(self, name: str, value: str):
        super().__init__(f"{name} must be an integer, got {value!r}")
        self.name = name
        self.value = value
