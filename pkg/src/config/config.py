import os

from dotenv import load_dotenv

from src.exceptions import ConfigError

# Load environment variables from .env file
load_dotenv()


def _int_env(name: str, default: int) -> int:
    value = os.getenv(name, "").strip()
    if not value:
        return default
    try:
        return int(value)
    except ValueError:
        raise ConfigError(name, value) from None


class Config:
    """
    Process-wide settings read from the environment (and an optional .env file).

    Integer settings are parsed when requested, so a malformed value is
    reported by the command that needs it rather than at import.

    Attributes:
        LOG_FILE (str): Log file path; empty disables file logging
        LOG_LEVEL (str): Logging level name
    """

    LOG_FILE = os.getenv("SPECTRAL_CODEC_LOG_FILE", "spectral_codec.log")
    LOG_LEVEL = os.getenv("SPECTRAL_CODEC_LOG_LEVEL", "INFO")

    @staticmethod
    def seed() -> int:
        """Default seed for RVQ training and Griffin-Lim."""
        return _int_env("SPECTRAL_CODEC_SEED", 0)

    @staticmethod
    def gl_iters() -> int:
        """Default Griffin-Lim iteration count."""
        return _int_env("SPECTRAL_CODEC_GL_ITERS", 32)

    @staticmethod
    def workers() -> int:
        """Corpus reader threads for fitting; 0 picks a default."""
        return _int_env("SPECTRAL_CODEC_WORKERS", 0)
