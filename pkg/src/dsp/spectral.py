"""
Spectral analysis and synthesis primitives.

Frames are always laid out as rows: an STFT is ``[frames x (n_fft/2 + 1)]``
and a mel spectrogram is ``[frames x n_mels]``.
"""
import logging
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Optional, Union

import librosa
import numpy as np
from scipy import signal

from src.exceptions import DspError

logger = logging.getLogger(__name__)

DEFAULT_SAMPLE_RATE = 44100


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    """
    Mono waveform with its sample rate.

    Attributes:
        samples: 1-D float64 array of amplitudes (nominally in [-1, 1])
        sample_rate: Sampling frequency in Hz
    """
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise DspError(f"audio must be mono (1-D), got shape {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise DspError("audio contains non-finite samples")
        if int(self.sample_rate) <= 0:
            raise DspError(f"sample rate must be positive, got {self.sample_rate}")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return int(self.samples.shape[0])

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    @classmethod
    def silence(cls, num_samples: int, sample_rate: int) -> "AudioBuffer":
        return cls(np.zeros(num_samples), sample_rate)


@dataclass(frozen=True)
class SpectrogramConfig:
    """
    STFT parameters. Only the Hann window is supported.

    Attributes:
        n_fft: FFT size in samples
        win_length: Window length in samples (zero-padded to n_fft)
        hop_length: Frame advance in samples
        centered: Reflect-pad n_fft/2 samples on both sides before framing
    """
    n_fft: int = 2048
    win_length: int = 2048
    hop_length: int = 512
    centered: bool = True
    window: str = "hann"

    def __post_init__(self):
        if self.window != "hann":
            raise DspError(f"unsupported window '{self.window}', only 'hann' is available")
        if not 0 < self.hop_length <= self.win_length <= self.n_fft:
            raise DspError(
                "expected 0 < hop_length <= win_length <= n_fft, got "
                f"hop={self.hop_length}, win={self.win_length}, n_fft={self.n_fft}"
            )

    @property
    def num_bins(self) -> int:
        return self.n_fft // 2 + 1

    @classmethod
    def for_window(cls, window_length: int) -> "SpectrogramConfig":
        """Configuration with n_fft = win = window_length and a 25% hop."""
        return cls(n_fft=window_length, win_length=window_length, hop_length=max(1, window_length // 4))


@dataclass(frozen=True)
class MelConfig:
    """
    Mel filterbank and log compression parameters.

    Attributes:
        n_mels: Number of triangular filters
        f_min: Lowest filter edge in Hz
        f_max: Highest filter edge in Hz; None means Nyquist
        log_floor: Clamp applied before the natural logarithm
    """
    n_mels: int = 80
    f_min: float = 0.0
    f_max: Optional[float] = None
    log_floor: float = 1e-5

    def __post_init__(self):
        if self.n_mels < 1:
            raise DspError(f"n_mels must be >= 1, got {self.n_mels}")
        if not self.log_floor > 0:
            raise DspError(f"log_floor must be positive, got {self.log_floor}")

    def resolve(self, sample_rate: int) -> "MelConfig":
        """
        Pin f_max to a concrete frequency and validate the band against Nyquist.

        Args:
            sample_rate: Sampling frequency the filterbank is built for

        Returns:
            MelConfig: Copy with an explicit f_max

        Raises:
            DspError: If the band is empty or exceeds Nyquist
        """
        nyquist = sample_rate / 2
        f_max = nyquist if self.f_max is None else float(self.f_max)
        if f_max > nyquist:
            raise DspError(f"f_max {f_max} Hz exceeds Nyquist {nyquist} Hz")
        if not 0 <= self.f_min < f_max:
            raise DspError(f"expected 0 <= f_min < f_max, got f_min={self.f_min}, f_max={f_max}")
        return replace(self, f_min=float(self.f_min), f_max=f_max)


@dataclass(frozen=True, eq=False)
class MelFrames:
    """
    Log-mel features with the configuration that produced them.

    Attributes:
        values: Array [frames x n_mels] of natural-log mel magnitudes
        sample_rate: Sampling frequency of the analysed audio
        spec_cfg: STFT configuration used
        mel_cfg: Resolved mel configuration used
    """
    values: np.ndarray
    sample_rate: int
    spec_cfg: SpectrogramConfig = field(default_factory=SpectrogramConfig)
    mel_cfg: MelConfig = field(default_factory=MelConfig)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != self.mel_cfg.n_mels:
            raise DspError(
                f"mel frames must have shape [frames x {self.mel_cfg.n_mels}], got {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def num_frames(self) -> int:
        return int(self.values.shape[0])

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.spec_cfg.hop_length


def analysis_window(cfg: SpectrogramConfig) -> np.ndarray:
    """Periodic Hann window of win_length samples, centred in n_fft."""
    window = librosa.filters.get_window(cfg.window, cfg.win_length, fftbins=True)
    return librosa.util.pad_center(np.asarray(window, dtype=np.float64), size=cfg.n_fft)


def is_cola(cfg: SpectrogramConfig) -> bool:
    window = librosa.filters.get_window(cfg.window, cfg.win_length, fftbins=True)
    return bool(signal.check_COLA(window, cfg.win_length, cfg.win_length - cfg.hop_length))


def _stft_array(samples: np.ndarray, cfg: SpectrogramConfig) -> np.ndarray:
    if samples.shape[0] == 0:
        raise DspError("cannot analyse empty audio")
    if not cfg.centered and samples.shape[0] < cfg.n_fft:
        raise DspError(
            f"un-centred analysis needs at least n_fft={cfg.n_fft} samples, got {samples.shape[0]}"
        )
    try:
        spec = librosa.stft(
            samples,
            n_fft=cfg.n_fft,
            hop_length=cfg.hop_length,
            win_length=cfg.win_length,
            window=cfg.window,
            center=cfg.centered,
            pad_mode="reflect",
            dtype=np.complex128,
        )
    except librosa.util.exceptions.ParameterError as e:
        raise DspError(f"STFT failed: {e}") from e
    return np.ascontiguousarray(spec.T)


def _istft_array(spec: np.ndarray, cfg: SpectrogramConfig, length: Optional[int] = None) -> np.ndarray:
    return librosa.istft(
        np.ascontiguousarray(spec.T),
        hop_length=cfg.hop_length,
        win_length=cfg.win_length,
        n_fft=cfg.n_fft,
        window=cfg.window,
        center=cfg.centered,
        length=length,
        dtype=np.float64,
    )


def stft(audio: AudioBuffer, cfg: Optional[SpectrogramConfig] = None) -> np.ndarray:
    """
    Short-time Fourier transform.

    Args:
        audio: Input waveform
        cfg: STFT configuration (defaults to 2048/2048/512, centred)

    Returns:
        np.ndarray: Complex matrix [frames x (n_fft/2 + 1)]; with centring the
        frame count is floor(len / hop) + 1

    Raises:
        DspError: If the audio is empty or too short for the configuration
    """
    cfg = cfg or SpectrogramConfig()
    return _stft_array(audio.samples, cfg)


def istft(
    spec: np.ndarray,
    cfg: Optional[SpectrogramConfig] = None,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    length: Optional[int] = None,
) -> AudioBuffer:
    """
    Inverse STFT by weighted overlap-add.

    Args:
        spec: Complex matrix [frames x (n_fft/2 + 1)]
        cfg: STFT configuration; must satisfy constant overlap-add
        sample_rate: Sample rate attached to the result
        length: Exact output length; defaults to (frames - 1) * hop when centred

    Returns:
        AudioBuffer: Reconstructed waveform

    Raises:
        DspError: If the configuration is not COLA or the shape does not match
    """
    cfg = cfg or SpectrogramConfig()
    spec = np.asarray(spec)
    if spec.ndim != 2 or spec.shape[1] != cfg.num_bins:
        raise DspError(f"expected spectrum [frames x {cfg.num_bins}], got {spec.shape}")
    if not is_cola(cfg):
        raise DspError(
            f"Hann window of {cfg.win_length} samples with hop {cfg.hop_length} "
            "does not satisfy constant overlap-add"
        )
    return AudioBuffer(_istft_array(spec, cfg, length), sample_rate)


@lru_cache(maxsize=64)
def _cached_filterbank(sample_rate: int, n_fft: int, mel_cfg: MelConfig) -> np.ndarray:
    with warnings.catch_warnings():
        # librosa warns about empty filters; callers decide whether they are acceptable
        warnings.simplefilter("ignore", UserWarning)
        fb = librosa.filters.mel(
            sr=sample_rate,
            n_fft=n_fft,
            n_mels=mel_cfg.n_mels,
            fmin=mel_cfg.f_min,
            fmax=mel_cfg.f_max,
            htk=True,
            norm=None,
            dtype=np.float64,
        )
    fb.setflags(write=False)
    return fb


def mel_filterbank(
    sample_rate: int,
    cfg_spec: Optional[SpectrogramConfig] = None,
    cfg_mel: Optional[MelConfig] = None,
    allow_empty: bool = False,
) -> np.ndarray:
    """
    Triangular HTK-scale mel filterbank.

    Args:
        sample_rate: Sampling frequency in Hz
        cfg_spec: STFT configuration (only n_fft is used)
        cfg_mel: Mel configuration
        allow_empty: Accept filters narrower than one FFT bin (all-zero rows)

    Returns:
        np.ndarray: Read-only matrix [n_mels x (n_fft/2 + 1)]

    Raises:
        DspError: If the band is invalid or, unless allowed, a filter is empty
    """
    cfg_spec = cfg_spec or SpectrogramConfig()
    cfg_mel = (cfg_mel or MelConfig()).resolve(sample_rate)
    fb = _cached_filterbank(int(sample_rate), cfg_spec.n_fft, cfg_mel)
    if not allow_empty:
        empty = np.flatnonzero(fb.sum(axis=1) <= 0)
        if empty.size:
            raise DspError(
                f"{empty.size} of {cfg_mel.n_mels} mel filters are empty at n_fft={cfg_spec.n_fft}; "
                f"first empty row {int(empty[0])}"
            )
    return fb


def log_mel(
    audio: AudioBuffer,
    spec_cfg: Optional[SpectrogramConfig] = None,
    mel_cfg: Optional[MelConfig] = None,
) -> MelFrames:
    """
    Natural-log mel spectrogram: ln(max(filterbank . |STFT|, log_floor)).

    Args:
        audio: Input waveform
        spec_cfg: STFT configuration
        mel_cfg: Mel configuration

    Returns:
        MelFrames: Features at sample_rate / hop_length frames per second
    """
    spec_cfg = spec_cfg or SpectrogramConfig()
    mel_cfg = (mel_cfg or MelConfig()).resolve(audio.sample_rate)
    fb = mel_filterbank(audio.sample_rate, spec_cfg, mel_cfg)
    magnitude = np.abs(stft(audio, spec_cfg))
    values = np.log(np.maximum(magnitude @ fb.T, mel_cfg.log_floor))
    return MelFrames(values, audio.sample_rate, spec_cfg, mel_cfg)


def mel_to_linear(mel: Union[MelFrames, np.ndarray], filterbank: np.ndarray) -> np.ndarray:
    """
    Approximate linear magnitudes from log-mel features.

    Applies the least-squares pseudo-inverse of the filterbank to exp(mel) and
    clamps negative values to zero.

    Args:
        mel: Log-mel frames [frames x n_mels]
        filterbank: Matrix [n_mels x bins] that produced them

    Returns:
        np.ndarray: Non-negative magnitudes [frames x bins]

    Raises:
        DspError: On shape mismatch or non-finite input
    """
    values = mel.values if isinstance(mel, MelFrames) else np.asarray(mel, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != filterbank.shape[0]:
        raise DspError(
            f"mel shape {values.shape} does not match filterbank with {filterbank.shape[0]} rows"
        )
    if not np.all(np.isfinite(values)):
        raise DspError("mel frames contain non-finite values")
    inverse = np.linalg.pinv(filterbank)
    return np.maximum(np.exp(values) @ inverse.T, 0.0)
