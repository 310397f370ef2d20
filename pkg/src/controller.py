import concurrent.futures
import logging
import os
from typing import Dict, List, Optional, Tuple

from tqdm import tqdm

from src.bitstream.stream import MAGIC as STREAM_MAGIC
from src.bitstream.stream import TokenStream, bitrate, bits_for, pack, token_rate, unpack
from src.codec.model import CodecModel, CodecOptions, QuantizerVariant, compute_fit_stats, fit_codec_from_mels
from src.codec.pipeline import decode_audio, encode_audio
from src.codec.serialization import MAGIC as MODEL_MAGIC
from src.codec.serialization import load_model, save_model
from src.config.variants import get_default_options
from src.dsp.spectral import AudioBuffer, MelFrames, log_mel
from src.exceptions import AudioFormatError, AudioIOError, MetricsError, ValidationError
from src.exporters.json_exporter import JSONExporter
from src.metrics.report import MetricReport, evaluate, summarize_reports
from src.utils.audio_io import WavFileHandler

logger = logging.getLogger(__name__)

# Largest length difference tolerated by eval before trimming to the shorter signal
MAX_LENGTH_SLACK = 2048


def _read_bytes(path: str) -> bytes:
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as e:
        raise AudioIOError(f"cannot read {path}: {e}") from e


def _write_bytes(path: str, data: bytes) -> str:
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "wb") as f:
            f.write(data)
    except OSError as e:
        raise AudioIOError(f"cannot write {path}: {e}") from e
    return path


def load_model_file(path: str) -> CodecModel:
    return load_model(_read_bytes(path))


def build_options(variant: str, overrides: Optional[Dict] = None) -> CodecOptions:
    """Codec options: variant defaults, then any non-None override."""
    values = get_default_options(variant)
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return CodecOptions(**values)


def _analyse(path: str) -> Tuple[str, MelFrames]:
    return path, log_mel(WavFileHandler.read(path))


def load_corpus_features(corpus_dir: str, workers: int = 0) -> List[Tuple[str, MelFrames]]:
    """
    Read every WAV below a directory and compute its log-mel features.

    Files are processed by a thread pool; results come back in sorted path
    order regardless of completion order.

    Raises:
        AudioFormatError: If there are no WAV files or sample rates differ
    """
    paths = WavFileHandler.discover_corpus(corpus_dir)
    if not paths:
        raise AudioFormatError(f"no WAV files found in {corpus_dir}")
    max_workers = workers if workers > 0 else min(8, os.cpu_count() or 1)
    logger.info(f"Analysing {len(paths)} files with {max_workers} workers")

    results: Dict[str, MelFrames] = {}
    with concurrent.futures.ThreadPoolExecutor(max_workers=max_workers) as executor:
        futures = [executor.submit(_analyse, path) for path in paths]
        with tqdm(total=len(futures), desc="Analysing corpus", unit="file") as pbar:
            for future in concurrent.futures.as_completed(futures):
                path, mel = future.result()
                results[path] = mel
                pbar.update(1)

    features = [(path, results[path]) for path in sorted(results)]
    reference_rate = features[0][1].sample_rate
    offenders = [f"{path} ({mel.sample_rate} Hz)" for path, mel in features if mel.sample_rate != reference_rate]
    if offenders:
        raise AudioFormatError(
            f"corpus mixes sample rates; expected {reference_rate} Hz, got: {', '.join(offenders)}"
        )
    return features


def run_fit(
    corpus_dir: str,
    out_model: str,
    variant: str = "fsq",
    seed: int = 0,
    overrides: Optional[Dict] = None,
    workers: int = 0,
    stats_out: Optional[str] = None,
) -> Dict:
    """
    Fit a codec on a WAV corpus and write the model file.

    Returns:
        dict: Fit statistics (frames, embedding and codebook stats)
    """
    options = build_options(variant, overrides)
    features = load_corpus_features(corpus_dir, workers)
    mels = [mel for _, mel in features]
    model = fit_codec_from_mels(mels, QuantizerVariant(variant), seed, options, show_progress=True)
    _write_bytes(out_model, save_model(model))
    logger.info(f"Model saved to: {out_model}")

    stats = compute_fit_stats(model, mels)
    stats["files"] = len(features)
    if stats_out:
        JSONExporter().export(stats, stats_out)
        logger.info(f"Fit statistics saved to: {stats_out}")
    return stats


def run_encode(in_wav: str, model_path: str, out_spct: str) -> TokenStream:
    model = load_model_file(model_path)
    audio = WavFileHandler.read(in_wav)
    stream = encode_audio(audio, model)
    logger.info(f"Encoded {audio.duration:.2f} s into {stream.header.num_frames} frames")
    _write_bytes(out_spct, pack(stream))
    logger.info(f"Token stream saved to: {out_spct}")
    return stream


def run_decode(in_spct: str, model_path: str, out_wav: str, gl_iters: int = 32, seed: int = 0) -> AudioBuffer:
    model = load_model_file(model_path)
    stream = unpack(_read_bytes(in_spct))
    audio = decode_audio(stream, model, gl_iterations=gl_iters, seed=seed)
    WavFileHandler.write(out_wav, audio)
    return audio


def _align(reference: AudioBuffer, estimate: AudioBuffer) -> Tuple[AudioBuffer, AudioBuffer]:
    # decoded audio covers whole frames only, so it can be a little shorter than its source
    difference = abs(len(reference) - len(estimate))
    if difference == 0:
        return reference, estimate
    if difference > MAX_LENGTH_SLACK:
        raise MetricsError(
            f"lengths differ by {difference} samples ({len(reference)} vs {len(estimate)})"
        )
    n = min(len(reference), len(estimate))
    logger.warning(f"Trimming both signals to {n} samples for evaluation")
    return AudioBuffer(reference.samples[:n], reference.sample_rate), AudioBuffer(estimate.samples[:n], estimate.sample_rate)


def run_eval(ref_wav: str, est_wav: str, stream_path: Optional[str] = None) -> MetricReport:
    reference, estimate = _align(WavFileHandler.read(ref_wav), WavFileHandler.read(est_wav))
    header = unpack(_read_bytes(stream_path)).header if stream_path else None
    return evaluate(reference, estimate, header)


def run_eval_dir(
    ref_dir: str,
    est_dir: str,
    stream_path: Optional[str] = None,
) -> Tuple[Dict[str, MetricReport], Dict[str, Tuple[float, float]]]:
    """
    Evaluate WAV files paired by relative path.

    Returns:
        tuple: Per-file reports keyed by relative path, and the mean/CI summary
    """
    references = WavFileHandler.discover_corpus(ref_dir)
    header = unpack(_read_bytes(stream_path)).header if stream_path else None
    reports: Dict[str, MetricReport] = {}
    for ref_path in tqdm(references, desc="Evaluating", unit="file"):
        relative = os.path.relpath(ref_path, ref_dir)
        est_path = os.path.join(est_dir, relative)
        if not os.path.exists(est_path):
            logger.warning(f"No estimate for {relative}, skipping")
            continue
        reference, estimate = _align(WavFileHandler.read(ref_path), WavFileHandler.read(est_path))
        reports[relative] = evaluate(reference, estimate, header)
    if not reports:
        raise MetricsError(f"no WAV files in {ref_dir} have a counterpart in {est_dir}")
    return reports, summarize_reports(list(reports.values()))


def describe_stream(stream: TokenStream) -> Dict:
    header = stream.header
    return {
        "kind": "stream",
        "version": header.version,
        "sample_rate": header.sample_rate,
        "hop_length": header.hop_length,
        "frames": header.num_frames,
        "codebooks": header.num_codebooks,
        "bits": header.bits_per_index,
        "codebook_size": header.codebook_size,
        "token_rate": round(token_rate(header), 2),
        "bitrate_bps": round(bitrate(header), 1),
        "duration_s": round(header.num_frames / token_rate(header), 3),
    }


def describe_model(model: CodecModel) -> Dict:
    info = {
        "kind": "model",
        "version": model.format_version,
        "variant": model.variant.value,
        "sample_rate": model.sample_rate,
        "n_fft": model.spec_cfg.n_fft,
        "win_length": model.spec_cfg.win_length,
        "hop_length": model.spec_cfg.hop_length,
        "n_mels": model.mel_cfg.n_mels,
        "f_min": model.mel_cfg.f_min,
        "f_max": model.mel_cfg.f_max,
        "embedding_dim": model.embedding_dim,
        "codebooks": model.num_codebooks,
        "codebook_size": model.codebook_size,
        "ridge_lambda": model.ridge_lambda,
        "token_rate": round(model.frame_rate, 2),
    }
    if model.quantizer is not None:
        bits = bits_for(model.codebook_size)
        info["bits"] = bits
        info["bitrate_bps"] = round(model.num_codebooks * bits * model.frame_rate, 1)
    return info


def run_info(path: str) -> Dict:
    """
    Describe a ``.spct`` stream or an ``SCMK`` model, detected by magic.

    Raises:
        ValidationError: If the file is neither
    """
    data = _read_bytes(path)
    if data[:4] == STREAM_MAGIC:
        return describe_stream(unpack(data))
    if data[:4] == MODEL_MAGIC:
        return describe_model(load_model(data))
    raise ValidationError(f"{path} is neither a token stream nor a codec model")
