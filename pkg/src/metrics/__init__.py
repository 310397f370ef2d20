from src.metrics.distances import (
    MULTI_RES_MELS,
    MULTI_RES_WINDOWS,
    SI_SDR_CAP,
    log_mel_distance,
    log_stft_distance,
    multi_res_mel_distance,
    multi_res_stft_distance,
    si_sdr,
)
from src.metrics.report import MetricReport, evaluate, summarize_reports, summary_to_text

__all__ = [
    "MULTI_RES_MELS",
    "MULTI_RES_WINDOWS",
    "SI_SDR_CAP",
    "MetricReport",
    "evaluate",
    "log_mel_distance",
    "log_stft_distance",
    "multi_res_mel_distance",
    "multi_res_stft_distance",
    "si_sdr",
    "summarize_reports",
    "summary_to_text",
]
