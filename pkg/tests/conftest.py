import os
import sys
sys.path.insert(0, os.path.abspath('.'))

import numpy as np
import pytest

from src.dsp.spectral import AudioBuffer

SAMPLE_RATE = 44100
HOP = 512


def _formant_envelope(freqs, formants):
    envelope = np.full_like(freqs, 0.02)
    for centre, width, gain in formants:
        envelope += gain * np.exp(-0.5 * ((freqs - centre) / width) ** 2)
    return envelope


def synth_speech(seed: int, num_hops: int = 258, sample_rate: int = SAMPLE_RATE) -> AudioBuffer:
    """
    Speech-like test signal: a harmonic source with a gliding fundamental,
    drifting formant envelope, syllable-rate amplitude modulation and a
    breath-noise floor. Length is a whole number of hops.
    """
    rng = np.random.default_rng(seed)
    n = num_hops * HOP
    t = np.arange(n) / sample_rate
    f0 = 110.0 + 40.0 * rng.random() + 25.0 * np.sin(2 * np.pi * (0.4 + 0.6 * rng.random()) * t + rng.uniform(0, 2 * np.pi))
    phase = 2 * np.pi * np.cumsum(f0) / sample_rate

    drift = 1.0 + 0.15 * np.sin(2 * np.pi * 0.8 * t + rng.uniform(0, 2 * np.pi))
    formants = [
        (550.0 * (0.85 + 0.3 * rng.random()), 120.0, 1.0),
        (1500.0 * (0.85 + 0.3 * rng.random()), 200.0, 0.5),
        (2600.0 * (0.85 + 0.3 * rng.random()), 300.0, 0.25),
    ]

    voiced = np.zeros(n)
    for k in range(1, 41):
        freqs = k * f0 * drift
        voiced += _formant_envelope(freqs, formants) * np.sin(k * phase) * (freqs < sample_rate / 2)

    syllables = 0.65 + 0.35 * np.sin(2 * np.pi * (3.0 + rng.random()) * t + rng.uniform(0, 2 * np.pi))
    noise = 0.01 * rng.standard_normal(n)
    samples = syllables * voiced + noise
    return AudioBuffer(0.5 * samples / np.max(np.abs(samples)), sample_rate)


@pytest.fixture
def speech():
    """A single speech-like clip of 258 hops."""
    return synth_speech(seed=1)


@pytest.fixture(scope="session")
def speech_factory():
    """Callable building speech-like clips: speech_factory(seed, num_hops=258)."""
    return synth_speech


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def corpus(speech_factory):
    """Twelve training clips, about 3100 frames in total."""
    return [speech_factory(seed) for seed in range(100, 112)]


@pytest.fixture(scope="session")
def corpus_mels(corpus):
    from src.dsp.spectral import log_mel
    return [log_mel(audio) for audio in corpus]


@pytest.fixture(scope="session")
def fsq_model(corpus_mels):
    from src.codec.model import CodecOptions, QuantizerVariant, fit_codec_from_mels
    return fit_codec_from_mels(corpus_mels, QuantizerVariant.FSQ, seed=0, options=CodecOptions(min_frame_ratio=1.0))


@pytest.fixture(scope="session")
def rvq_model(corpus_mels):
    from src.codec.model import CodecOptions, QuantizerVariant, fit_codec_from_mels
    options = CodecOptions(rvq_stages=4, rvq_size=32)
    return fit_codec_from_mels(corpus_mels, QuantizerVariant.RVQ, seed=0, options=options)


@pytest.fixture(scope="session")
def none_model(corpus_mels):
    from src.codec.model import QuantizerVariant, fit_codec_from_mels
    return fit_codec_from_mels(corpus_mels, QuantizerVariant.NONE, seed=0)
