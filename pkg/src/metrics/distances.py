"""
Objective distances between a reference waveform and an estimate.

All spectral distances use centred Hann STFTs with reflect padding and the
natural-log magnitude clamped at ``log_floor``; they are means over every
time-frequency cell.
"""
import logging
from typing import Optional, Sequence

import numpy as np

from src.dsp.spectral import AudioBuffer, MelConfig, SpectrogramConfig, mel_filterbank, stft
from src.exceptions import MetricsError

logger = logging.getLogger(__name__)

SI_SDR_CAP = 100.0
LOG_FLOOR = 1e-5
MULTI_RES_WINDOWS = (32, 64, 128, 256, 512, 1024, 2048)
MULTI_RES_MELS = (5, 10, 20, 40, 80, 160, 320)


def _check_pair(reference: AudioBuffer, estimate: AudioBuffer) -> None:
    if reference.sample_rate != estimate.sample_rate:
        raise MetricsError(
            f"sample rates differ: {reference.sample_rate} Hz vs {estimate.sample_rate} Hz"
        )
    if len(reference) != len(estimate):
        raise MetricsError(f"lengths differ: {len(reference)} vs {len(estimate)} samples")
    if len(reference) == 0:
        raise MetricsError("cannot compare empty signals")


def si_sdr(reference: AudioBuffer, estimate: AudioBuffer) -> float:
    """
    Scale-invariant signal-to-distortion ratio.

    The reference is scaled by alpha = <estimate, reference> / ||reference||^2
    and the ratio of the scaled reference energy to the residual energy is
    returned in dB, clamped to [-100, 100].

    Args:
        reference: Clean signal, not all zeros
        estimate: Signal under test, same length and rate

    Returns:
        float: SI-SDR in dB; 100.0 when the residual is exactly zero

    Raises:
        MetricsError: On length or rate mismatch or a silent reference
    """
    _check_pair(reference, estimate)
    ref = reference.samples
    est = estimate.samples
    ref_energy = float(np.dot(ref, ref))
    if ref_energy == 0.0:
        raise MetricsError("SI-SDR is undefined for an all-zero reference")
    alpha = float(np.dot(est, ref)) / ref_energy
    target = alpha * ref
    residual = target - est
    target_energy = float(np.dot(target, target))
    residual_energy = float(np.dot(residual, residual))
    if residual_energy == 0.0:
        return SI_SDR_CAP
    if target_energy == 0.0:
        return -SI_SDR_CAP
    value = 10.0 * np.log10(target_energy / residual_energy)
    return float(np.clip(value, -SI_SDR_CAP, SI_SDR_CAP))


def _log_magnitude(audio: AudioBuffer, cfg: SpectrogramConfig, log_floor: float) -> np.ndarray:
    return np.log(np.maximum(np.abs(stft(audio, cfg)), log_floor))


def log_stft_distance(
    reference: AudioBuffer,
    estimate: AudioBuffer,
    cfg: Optional[SpectrogramConfig] = None,
    log_floor: float = LOG_FLOOR,
) -> float:
    """
    Mean absolute difference of log-magnitude STFTs.

    Args:
        reference: First signal
        estimate: Second signal, same length and rate
        cfg: STFT configuration (defaults to window 2048, hop 512)
        log_floor: Magnitude clamp before the logarithm

    Returns:
        float: Non-negative, symmetric distance
    """
    _check_pair(reference, estimate)
    cfg = cfg or SpectrogramConfig()
    diff = _log_magnitude(reference, cfg, log_floor) - _log_magnitude(estimate, cfg, log_floor)
    return float(np.mean(np.abs(diff)))


def _log_mel_values(audio: AudioBuffer, cfg: SpectrogramConfig, fb: np.ndarray, log_floor: float) -> np.ndarray:
    return np.log(np.maximum(np.abs(stft(audio, cfg)) @ fb.T, log_floor))


def log_mel_distance(
    reference: AudioBuffer,
    estimate: AudioBuffer,
    spec_cfg: Optional[SpectrogramConfig] = None,
    mel_cfg: Optional[MelConfig] = None,
) -> float:
    """
    Mean absolute difference of log-mel spectrograms.

    Args:
        reference: First signal
        estimate: Second signal, same length and rate
        spec_cfg: STFT configuration (defaults to window 2048, hop 512)
        mel_cfg: Mel configuration (defaults to 80 bands)

    Returns:
        float: Non-negative, symmetric distance over all frames and bands
    """
    _check_pair(reference, estimate)
    spec_cfg = spec_cfg or SpectrogramConfig()
    mel_cfg = (mel_cfg or MelConfig()).resolve(reference.sample_rate)
    fb = mel_filterbank(reference.sample_rate, spec_cfg, mel_cfg)
    diff = (
        _log_mel_values(reference, spec_cfg, fb, mel_cfg.log_floor)
        - _log_mel_values(estimate, spec_cfg, fb, mel_cfg.log_floor)
    )
    return float(np.mean(np.abs(diff)))


def multi_res_stft_distance(
    reference: AudioBuffer,
    estimate: AudioBuffer,
    windows: Sequence[int] = MULTI_RES_WINDOWS,
) -> float:
    """Mean of log-STFT distances with n_fft = window and hop = window / 4."""
    _check_pair(reference, estimate)
    distances = [
        log_stft_distance(reference, estimate, SpectrogramConfig.for_window(w)) for w in windows
    ]
    return float(np.mean(distances))


def multi_res_mel_distance(
    reference: AudioBuffer,
    estimate: AudioBuffer,
    windows: Sequence[int] = MULTI_RES_WINDOWS,
    mel_dims: Sequence[int] = MULTI_RES_MELS,
) -> float:
    """
    Mean of log-mel distances, pairing each window length with one mel size.

    Filters narrower than one FFT bin at small windows have all-zero rows;
    those bands are left out of the mean for that resolution.

    Raises:
        MetricsError: If the two lists differ in length
    """
    _check_pair(reference, estimate)
    if len(windows) != len(mel_dims):
        raise MetricsError(f"{len(windows)} windows but {len(mel_dims)} mel sizes")
    distances = []
    for window, n_mels in zip(windows, mel_dims):
        spec_cfg = SpectrogramConfig.for_window(window)
        fb = mel_filterbank(reference.sample_rate, spec_cfg, MelConfig(n_mels=n_mels), allow_empty=True)
        fb = fb[fb.sum(axis=1) > 0]
        if fb.shape[0] == 0:
            logger.warning(f"no usable mel bands at window {window}, skipping resolution")
            continue
        diff = (
            _log_mel_values(reference, spec_cfg, fb, LOG_FLOOR)
            - _log_mel_values(estimate, spec_cfg, fb, LOG_FLOOR)
        )
        distances.append(float(np.mean(np.abs(diff))))
    if not distances:
        raise MetricsError("no resolution produced a usable mel filterbank")
    return float(np.mean(distances))
