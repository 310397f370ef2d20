"""
Griffin-Lim phase reconstruction.

Each iteration re-imposes the target magnitude on the STFT of the current
estimate and returns to the time domain through the exact least-squares
inverse of the analysis, reflect padding included: windowed frames are
overlap-added and every padded position is folded back onto the output
sample it mirrors. The spectral convergence therefore never increases, and
it is measured on the same centred frames ``stft`` produces.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from src.dsp.spectral import (
    DEFAULT_SAMPLE_RATE,
    AudioBuffer,
    SpectrogramConfig,
    _stft_array,
    analysis_window,
)
from src.exceptions import DspError

logger = logging.getLogger(__name__)

DEFAULT_ITERATIONS = 32


@dataclass
class GriffinLimResult:
    """
    Reconstructed waveform and the spectral convergence measured at each iteration.

    Attributes:
        audio: Reconstructed waveform
        convergence: ||(|STFT(x_i)| - M)|| / ||M|| per iteration, non-increasing
    """
    audio: AudioBuffer
    convergence: List[float] = field(default_factory=list)


def _bin_weights(num_bins: int, n_fft: int) -> np.ndarray:
    # one-sided spectrum: interior bins stand for two conjugate bins
    weights = np.full(num_bins, 2.0)
    weights[0] = 1.0
    if n_fft % 2 == 0:
        weights[-1] = 1.0
    return weights


def _weighted_norm(values: np.ndarray, weights: np.ndarray) -> float:
    return float(np.sqrt(np.sum(weights * values * values)))


def _output_length(num_frames: int, cfg: SpectrogramConfig) -> int:
    if cfg.centered:
        return (num_frames - 1) * cfg.hop_length
    return cfg.n_fft + (num_frames - 1) * cfg.hop_length


def _sample_map(num_frames: int, cfg: SpectrogramConfig) -> np.ndarray:
    """Output sample that feeds each position of the analysis grid."""
    length = _output_length(num_frames, cfg)
    if cfg.centered:
        return np.pad(np.arange(length), cfg.n_fft // 2, mode="reflect")
    return np.arange(length)


class _LeastSquaresSynthesis:
    """
    Waveform whose STFT is closest to a given spectrum.

    Minimises sum_m ||w * frame_m(x) - irfft(Z_m)||^2 over x, which by
    Parseval is the full-spectrum distance between STFT(x) and Z.
    """

    def __init__(self, num_frames: int, cfg: SpectrogramConfig):
        self.n_fft = cfg.n_fft
        self.length = _output_length(num_frames, cfg)
        self.window = analysis_window(cfg)
        grid = np.arange(cfg.n_fft)[None, :] + cfg.hop_length * np.arange(num_frames)[:, None]
        self.targets = _sample_map(num_frames, cfg)[grid].ravel()
        self.norm = np.bincount(
            self.targets, weights=np.tile(self.window ** 2, num_frames), minlength=self.length
        )
        self.covered = self.norm > np.finfo(np.float64).tiny

    def __call__(self, spec: np.ndarray) -> np.ndarray:
        frames = np.fft.irfft(spec, n=self.n_fft, axis=1) * self.window
        folded = np.bincount(self.targets, weights=frames.ravel(), minlength=self.length)
        waveform = np.zeros(self.length)
        waveform[self.covered] = folded[self.covered] / self.norm[self.covered]
        return waveform


def griffin_lim(
    magnitude: np.ndarray,
    cfg: Optional[SpectrogramConfig] = None,
    sample_rate: int = DEFAULT_SAMPLE_RATE,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
    length: Optional[int] = None,
) -> GriffinLimResult:
    """
    Estimate a waveform whose STFT magnitude matches the target.

    Args:
        magnitude: Non-negative matrix [frames x (n_fft/2 + 1)]
        cfg: STFT configuration the magnitude refers to
        sample_rate: Sample rate attached to the result
        iterations: Number of projection rounds (>= 1)
        seed: Seed for the uniform initial phase in [-pi, pi)
        length: Optional exact output length (zero-padded or trimmed)

    Returns:
        GriffinLimResult: Waveform plus per-iteration spectral convergence

    Raises:
        DspError: On invalid iteration count, shape, or negative magnitudes
    """
    cfg = cfg or SpectrogramConfig()
    magnitude = np.asarray(magnitude, dtype=np.float64)
    if iterations < 1:
        raise DspError(f"iterations must be >= 1, got {iterations}")
    if magnitude.ndim != 2 or magnitude.shape[1] != cfg.num_bins or magnitude.shape[0] < 1:
        raise DspError(f"expected magnitude [frames x {cfg.num_bins}], got {magnitude.shape}")
    if not np.all(np.isfinite(magnitude)) or np.any(magnitude < 0):
        raise DspError("magnitude must be finite and non-negative")

    num_frames = magnitude.shape[0]
    natural_length = _output_length(num_frames, cfg)
    out_length = natural_length if length is None else int(length)

    weights = _bin_weights(cfg.num_bins, cfg.n_fft)
    target_norm = _weighted_norm(magnitude, weights)
    if target_norm == 0.0:
        logger.debug("Griffin-Lim target is silent, returning zeros")
        return GriffinLimResult(AudioBuffer.silence(out_length, sample_rate), [0.0] * iterations)
    if natural_length == 0:
        # a single centred frame spans no output samples
        return GriffinLimResult(AudioBuffer.silence(out_length, sample_rate), [1.0] * iterations)

    synthesize = _LeastSquaresSynthesis(num_frames, cfg)
    rng = np.random.default_rng(seed)
    phase = np.exp(1j * rng.uniform(-np.pi, np.pi, size=magnitude.shape))
    waveform = synthesize(magnitude * phase)

    convergence = []
    for _ in range(iterations):
        estimate = _stft_array(waveform, cfg)
        estimate_mag = np.abs(estimate)
        convergence.append(_weighted_norm(estimate_mag - magnitude, weights) / target_norm)
        unit = np.ones_like(estimate)
        nonzero = estimate_mag > 0
        unit[nonzero] = estimate[nonzero] / estimate_mag[nonzero]
        waveform = synthesize(magnitude * unit)

    logger.debug(
        f"Griffin-Lim: {iterations} iterations, convergence {convergence[0]:.4f} -> {convergence[-1]:.4f}"
    )

    if waveform.shape[0] < out_length:
        waveform = np.pad(waveform, (0, out_length - waveform.shape[0]))
    return GriffinLimResult(AudioBuffer(waveform[:out_length], sample_rate), convergence)
