import logging

import numpy as np

from src.bitstream.stream import TokenStream, bits_for
from src.codec.model import CodecModel
from src.dsp.griffin_lim import DEFAULT_ITERATIONS, griffin_lim
from src.dsp.spectral import AudioBuffer, MelFrames, log_mel, mel_filterbank, mel_to_linear
from src.exceptions import CodecModelError, TokenRangeError

logger = logging.getLogger(__name__)

UNQUANTIZED_MESSAGE = "unquantized model has no tokens"


def _check_features(mel: MelFrames, model: CodecModel) -> None:
    if mel.sample_rate != model.sample_rate:
        raise CodecModelError(
            f"features at {mel.sample_rate} Hz, model expects {model.sample_rate} Hz"
        )
    if mel.spec_cfg != model.spec_cfg or mel.mel_cfg != model.mel_cfg:
        raise CodecModelError(
            f"feature configuration {mel.spec_cfg}, {mel.mel_cfg} does not match the model's "
            f"{model.spec_cfg}, {model.mel_cfg}"
        )


def encode_frames(mel: MelFrames, model: CodecModel) -> TokenStream:
    """
    Quantize log-mel frames into a token stream.

    Args:
        mel: Features computed under the model's configuration
        model: Quantized codec model

    Returns:
        TokenStream: One row of codebook indices per frame

    Raises:
        CodecModelError: On configuration mismatch or an unquantized model
    """
    if model.quantizer is None:
        raise CodecModelError(UNQUANTIZED_MESSAGE)
    _check_features(mel, model)
    tokens = model.quantizer.encode(model.embed(mel.values))
    tokens = np.asarray(tokens, dtype=np.int64).reshape(mel.num_frames, model.num_codebooks)
    return TokenStream.from_tokens(
        tokens,
        sample_rate=model.sample_rate,
        hop_length=model.spec_cfg.hop_length,
        codebook_size=model.codebook_size,
        bits_per_index=bits_for(model.codebook_size),
    )


def decode_frames(stream: TokenStream, model: CodecModel) -> MelFrames:
    """
    Reconstruct log-mel frames from tokens.

    Args:
        stream: Tokens produced for this model
        model: Quantized codec model

    Returns:
        MelFrames: Frames [num_frames x n_mels]

    Raises:
        CodecModelError: If the stream header does not match the model
        TokenRangeError: If a token exceeds its codebook, with its position
    """
    if model.quantizer is None:
        raise CodecModelError(UNQUANTIZED_MESSAGE)
    header = stream.header
    if header.sample_rate != model.sample_rate or header.hop_length != model.spec_cfg.hop_length:
        raise CodecModelError(
            f"stream is {header.sample_rate} Hz / hop {header.hop_length}, model is "
            f"{model.sample_rate} Hz / hop {model.spec_cfg.hop_length}"
        )
    if header.num_codebooks != model.num_codebooks:
        raise CodecModelError(
            f"stream has {header.num_codebooks} codebooks, model has {model.num_codebooks}"
        )
    tokens = stream.tokens
    for c, size in enumerate(model.quantizer.codebook_sizes):
        bad = np.flatnonzero(tokens[:, c] >= size)
        if bad.size:
            frame = int(bad[0])
            raise TokenRangeError(frame, c, int(tokens[frame, c]), size)

    embedding = model.quantizer.decode(tokens) if tokens.shape[0] else np.zeros((0, model.embedding_dim))
    return MelFrames(model.synthesize(embedding), model.sample_rate, model.spec_cfg, model.mel_cfg)


def roundtrip_frames(mel: MelFrames, model: CodecModel) -> MelFrames:
    """
    Analysis and synthesis of log-mel frames through the bottleneck.

    Works for every variant; the unquantized one skips the quantizer.
    """
    _check_features(mel, model)
    embedding = model.embed(mel.values)
    if model.quantizer is not None:
        embedding = model.quantizer.quantize(embedding)
    return MelFrames(model.synthesize(embedding), model.sample_rate, model.spec_cfg, model.mel_cfg)


def encode_audio(audio: AudioBuffer, model: CodecModel) -> TokenStream:
    """Log-mel analysis followed by ``encode_frames``."""
    if audio.sample_rate != model.sample_rate:
        raise CodecModelError(
            f"audio is sampled at {audio.sample_rate} Hz, model expects {model.sample_rate} Hz"
        )
    stream = encode_frames(log_mel(audio, model.spec_cfg, model.mel_cfg), model)
    logger.info(f"Encoded {len(audio)} samples into {stream.num_frames} frames")
    return stream


def decode_audio(
    stream: TokenStream,
    model: CodecModel,
    gl_iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
) -> AudioBuffer:
    """
    Synthesize a waveform from tokens.

    Decoded log-mel is mapped to linear magnitudes with the filterbank
    pseudo-inverse and Griffin-Lim supplies the phase. Output whose peak
    exceeds 1.0 is peak-normalised.

    Args:
        stream: Tokens produced for this model
        model: Quantized codec model
        gl_iterations: Griffin-Lim iterations
        seed: Seed for the Griffin-Lim initial phase

    Returns:
        AudioBuffer: Waveform of (num_frames - 1) * hop samples
    """
    mel = decode_frames(stream, model)
    if mel.num_frames == 0:
        return AudioBuffer.silence(0, model.sample_rate)
    fb = mel_filterbank(model.sample_rate, model.spec_cfg, model.mel_cfg)
    magnitude = mel_to_linear(mel, fb)
    result = griffin_lim(
        magnitude,
        model.spec_cfg,
        sample_rate=model.sample_rate,
        iterations=gl_iterations,
        seed=seed,
    )
    samples = result.audio.samples
    peak = float(np.max(np.abs(samples))) if samples.size else 0.0
    if peak > 1.0:
        logger.debug(f"Peak-normalising decoded audio (peak {peak:.3f})")
        samples = samples / peak
    logger.info(f"Decoded {mel.num_frames} frames into {samples.shape[0]} samples")
    return AudioBuffer(samples, model.sample_rate)
