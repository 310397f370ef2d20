import logging
from dataclasses import asdict, dataclass, fields
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from src.bitstream.stream import StreamHeader, bitrate
from src.dsp.spectral import AudioBuffer
from src.exceptions import MetricsError
from src.metrics.distances import (
    log_mel_distance,
    log_stft_distance,
    multi_res_mel_distance,
    multi_res_stft_distance,
    si_sdr,
)

logger = logging.getLogger(__name__)

CONFIDENCE = 0.95


@dataclass(frozen=True)
class MetricReport:
    """
    Instrumental metrics of one reconstruction.

    Attributes:
        si_sdr_db: SI-SDR in dB, within [-100, 100]
        mel_distance: Log-mel L1 distance at window 2048 / hop 512
        stft_distance: Log-STFT L1 distance at window 2048 / hop 512
        multi_res_mel: Mean log-mel L1 over seven resolutions
        multi_res_stft: Mean log-STFT L1 over seven resolutions
        bitrate_bps: Raw stream bitrate, when a stream header is known
    """
    si_sdr_db: float
    mel_distance: float
    stft_distance: float
    multi_res_mel: float
    multi_res_stft: float
    bitrate_bps: Optional[float] = None

    def to_dict(self) -> Dict[str, Optional[float]]:
        return asdict(self)

    def to_text(self) -> str:
        """One ``name=value`` line per metric; bitrate is omitted when unknown."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "bitrate_bps":
                if value is not None:
                    lines.append(f"{f.name}={value:.1f}")
                continue
            lines.append(f"{f.name}={round(float(value), 6)!r}")
        return "\n".join(lines)


def evaluate(
    reference: AudioBuffer,
    estimate: AudioBuffer,
    header: Optional[StreamHeader] = None,
) -> MetricReport:
    """
    Compute every metric for one reference/estimate pair.

    Args:
        reference: Clean signal
        estimate: Reconstruction, same length and rate
        header: Stream the estimate was decoded from, for the bitrate field

    Returns:
        MetricReport: Populated report
    """
    report = MetricReport(
        si_sdr_db=si_sdr(reference, estimate),
        mel_distance=log_mel_distance(reference, estimate),
        stft_distance=log_stft_distance(reference, estimate),
        multi_res_mel=multi_res_mel_distance(reference, estimate),
        multi_res_stft=multi_res_stft_distance(reference, estimate),
        bitrate_bps=bitrate(header) if header is not None else None,
    )
    logger.debug(f"Evaluated pair: {report}")
    return report


def summarize_reports(reports: Sequence[MetricReport]) -> Dict[str, Tuple[float, float]]:
    """
    Mean and 95% confidence half-width of every metric over a test set.

    The half-width uses the Student-t quantile with n - 1 degrees of freedom
    and is 0.0 for a single report.

    Args:
        reports: Per-clip reports

    Returns:
        dict: metric name -> (mean, half_width); bitrate only when every report has one

    Raises:
        MetricsError: If no reports are given
    """
    if not reports:
        raise MetricsError("cannot summarize an empty set of reports")
    summary: Dict[str, Tuple[float, float]] = {}
    n = len(reports)
    for f in fields(MetricReport):
        values: List[Optional[float]] = [getattr(r, f.name) for r in reports]
        if any(v is None for v in values):
            continue
        array = np.asarray(values, dtype=np.float64)
        mean = float(array.mean())
        if n < 2:
            half_width = 0.0
        else:
            half_width = float(stats.t.ppf((1 + CONFIDENCE) / 2, n - 1) * stats.sem(array))
        summary[f.name] = (mean, half_width)
    return summary


def summary_to_text(summary: Dict[str, Tuple[float, float]]) -> str:
    return "\n".join(
        f"{name}={round(mean, 6)!r} ± {round(half, 6)!r}" for name, (mean, half) in summary.items()
    )
