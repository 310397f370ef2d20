import logging
import os
from typing import List

import numpy as np
import soundfile as sf

from src.dsp.spectral import AudioBuffer
from src.exceptions import AudioFormatError, AudioIOError

logger = logging.getLogger(__name__)


class WavFileHandler:
    """
    Reads and writes mono RIFF WAV files.

    16-bit PCM and 32-bit float are accepted on read; files are always written
    as 16-bit PCM. Resampling and channel mixing are never performed.
    """

    READ_SUBTYPES = ("PCM_16", "FLOAT")
    WRITE_SUBTYPE = "PCM_16"

    @staticmethod
    def get_supported_formats() -> List[str]:
        return [".wav"]

    @staticmethod
    def read(path: str) -> AudioBuffer:
        """
        Load a WAV file.

        Args:
            path: File path

        Returns:
            AudioBuffer: Samples scaled to [-1, 1] with the file's sample rate

        Raises:
            AudioIOError: If the file is missing or unreadable
            AudioFormatError: If it is not a mono 16-bit PCM or float WAV
        """
        try:
            info = sf.info(path)
        except (RuntimeError, OSError) as e:
            raise AudioIOError(f"cannot read audio file {path}: {e}") from e
        if info.format != "WAV":
            raise AudioFormatError(f"{path}: expected a WAV file, got {info.format}")
        if info.channels != 1:
            raise AudioFormatError(f"{path}: expected mono audio, got {info.channels} channels")
        if info.subtype not in WavFileHandler.READ_SUBTYPES:
            raise AudioFormatError(
                f"{path}: unsupported sample format {info.subtype}, "
                f"expected one of {', '.join(WavFileHandler.READ_SUBTYPES)}"
            )
        try:
            samples, sample_rate = sf.read(path, dtype="float64", always_2d=False)
        except (RuntimeError, OSError) as e:
            raise AudioIOError(f"cannot read audio file {path}: {e}") from e
        logger.debug(f"Read {path}: {samples.shape[0]} samples at {sample_rate} Hz")
        return AudioBuffer(samples, sample_rate)

    @staticmethod
    def write(path: str, audio: AudioBuffer) -> str:
        """
        Save audio as 16-bit PCM mono WAV, clipping to [-1, 1].

        Returns:
            str: The written path
        """
        directory = os.path.dirname(path)
        try:
            if directory:
                os.makedirs(directory, exist_ok=True)
            sf.write(
                path,
                np.clip(audio.samples, -1.0, 1.0),
                audio.sample_rate,
                subtype=WavFileHandler.WRITE_SUBTYPE,
                format="WAV",
            )
        except (RuntimeError, OSError) as e:
            raise AudioIOError(f"cannot write audio file {path}: {e}") from e
        logger.info(f"Audio saved to: {path}")
        return path

    @staticmethod
    def discover_corpus(directory: str) -> List[str]:
        """
        Recursively list WAV files below a directory, sorted by path.

        Other files are skipped with a warning.

        Raises:
            AudioIOError: If the directory does not exist
        """
        if not os.path.isdir(directory):
            raise AudioIOError(f"corpus directory does not exist: {directory}")
        found = []
        for root, dirs, files in os.walk(directory):
            dirs.sort()
            for name in sorted(files):
                path = os.path.join(root, name)
                if os.path.splitext(name)[1].lower() in WavFileHandler.get_supported_formats():
                    found.append(path)
                else:
                    logger.warning(f"Skipping non-WAV file: {path}")
        return sorted(found)
