import numpy as np
import pytest

from src.dsp.griffin_lim import griffin_lim
from src.dsp.spectral import AudioBuffer, SpectrogramConfig, stft
from src.exceptions import DspError
from src.metrics.distances import log_stft_distance

SR = 44100


def _synthetic(seed: int) -> AudioBuffer:
    rng = np.random.default_rng(seed)
    t = np.arange(64 * 512) / SR
    tones = sum(
        rng.uniform(0.1, 0.4) * np.sin(2 * np.pi * rng.uniform(80, 8000) * t + rng.uniform(0, 2 * np.pi))
        for _ in range(4)
    )
    return AudioBuffer(tones + 0.02 * rng.standard_normal(t.shape[0]), SR)


def _assert_non_increasing(values):
    for previous, current in zip(values, values[1:]):
        assert current <= previous * (1 + 1e-9) + 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_convergence_non_increasing_on_speech(speech_factory, seed):
    magnitude = np.abs(stft(speech_factory(seed, num_hops=64)))
    result = griffin_lim(magnitude, iterations=32, seed=seed)
    assert len(result.convergence) == 32
    _assert_non_increasing(result.convergence)


@pytest.mark.parametrize("seed", range(10))
def test_convergence_non_increasing_on_synthetic(seed):
    magnitude = np.abs(stft(_synthetic(seed)))
    result = griffin_lim(magnitude, iterations=32, seed=seed)
    _assert_non_increasing(result.convergence)


def test_sine_reconstruction_matches_spectrum():
    t = np.arange(16 * 512) / SR
    source = AudioBuffer(0.5 * np.sin(2 * np.pi * 8620.0 * t + 0.3), SR)
    magnitude = np.abs(stft(source))
    result = griffin_lim(magnitude, iterations=200, seed=0)
    assert len(result.audio) == len(source)
    assert result.convergence[-1] < 0.05
    assert log_stft_distance(source, result.audio) < 0.1


def test_convergence_is_measured_on_centred_frames(speech_factory):
    magnitude = np.abs(stft(speech_factory(5, num_hops=24)))
    result = griffin_lim(magnitude, iterations=8, seed=1)
    again = griffin_lim(magnitude, iterations=9, seed=1)
    weights = np.full(magnitude.shape[1], 2.0)
    weights[[0, -1]] = 1.0
    error = np.abs(stft(result.audio)) - magnitude
    measured = np.sqrt(np.sum(weights * error**2) / np.sum(weights * magnitude**2))
    assert measured == pytest.approx(again.convergence[-1], rel=1e-9)


def test_single_centred_frame_gives_empty_audio():
    result = griffin_lim(np.ones((1, 1025)), iterations=3)
    assert len(result.audio) == 0
    assert result.convergence == [1.0, 1.0, 1.0]


def test_output_length_matches_centred_grid(speech_factory):
    magnitude = np.abs(stft(speech_factory(3, num_hops=20)))
    result = griffin_lim(magnitude, iterations=4)
    assert len(result.audio) == (magnitude.shape[0] - 1) * 512
    assert len(griffin_lim(magnitude, iterations=2, length=5000).audio) == 5000


def test_uncentred_output_length():
    cfg = SpectrogramConfig(centered=False)
    magnitude = np.ones((5, cfg.num_bins))
    result = griffin_lim(magnitude, cfg, iterations=2)
    assert len(result.audio) == cfg.n_fft + 4 * cfg.hop_length


def test_seeded_runs_are_reproducible(speech_factory):
    magnitude = np.abs(stft(speech_factory(4, num_hops=20)))
    first = griffin_lim(magnitude, iterations=5, seed=7)
    second = griffin_lim(magnitude, iterations=5, seed=7)
    other = griffin_lim(magnitude, iterations=5, seed=8)
    np.testing.assert_array_equal(first.audio.samples, second.audio.samples)
    assert not np.array_equal(first.audio.samples, other.audio.samples)


def test_silent_target_gives_silence():
    result = griffin_lim(np.zeros((10, 1025)), iterations=3)
    assert np.all(result.audio.samples == 0.0)
    assert result.convergence == [0.0, 0.0, 0.0]


def test_invalid_arguments():
    with pytest.raises(DspError):
        griffin_lim(np.ones((4, 1025)), iterations=0)
    with pytest.raises(DspError):
        griffin_lim(-np.ones((4, 1025)))
    with pytest.raises(DspError):
        griffin_lim(np.ones((4, 100)))
