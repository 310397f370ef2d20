from src.dsp.griffin_lim import GriffinLimResult, griffin_lim
from src.dsp.spectral import (
    AudioBuffer,
    MelConfig,
    MelFrames,
    SpectrogramConfig,
    istft,
    log_mel,
    mel_filterbank,
    mel_to_linear,
    stft,
)

__all__ = [
    "AudioBuffer",
    "GriffinLimResult",
    "MelConfig",
    "MelFrames",
    "SpectrogramConfig",
    "griffin_lim",
    "istft",
    "log_mel",
    "mel_filterbank",
    "mel_to_linear",
    "stft",
]
