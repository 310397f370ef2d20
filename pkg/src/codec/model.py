"""
Spectral codec model: fitted linear maps around a quantized 32-dim bottleneck.

Analysis: log-mel -> per-bin normalisation -> principal-component projection
-> division by a per-dimension scale -> tanh. Synthesis: quantized embedding
-> ridge-regression affine map -> de-normalisation -> log-mel.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from src.dsp.spectral import (
    AudioBuffer,
    MelConfig,
    MelFrames,
    SpectrogramConfig,
    log_mel,
)
from src.exceptions import CodecModelError
from src.interfaces import QuantizerInterface
from src.quantize.fsq import FsqQuantizer, FsqSpec
from src.quantize.rvq import RvqCodebooks, RvqQuantizer, rvq_train
from src.quantize.stats import codebook_usage

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
STD_FLOOR = 1e-6
SATURATION_LEVEL = 0.995


class QuantizerVariant(str, Enum):
    FSQ = "fsq"
    RVQ = "rvq"
    NONE = "none"


@dataclass(frozen=True)
class CodecOptions:
    """
    Tunables for fitting a codec.

    Attributes:
        embedding_dim: Width of the bottleneck
        fsq_levels: Level counts of one FSQ group; groups tile the bottleneck
        rvq_stages: Number of RVQ stages
        rvq_size: Codewords per RVQ stage
        pin_zero: Keep the zero vector in every RVQ codebook
        ridge_lambda: Ridge penalty of the synthesis map
        scale_sigmas: tanh scale divisor in component standard deviations
        kmeans_max_iter: k-means iteration cap per RVQ stage
        kmeans_tol: Relative inertia tolerance for k-means
        min_frame_ratio: Required frames per code of the largest codebook
    """
    embedding_dim: int = 32
    fsq_levels: Tuple[int, ...] = (8, 5, 5, 5)
    rvq_stages: int = 8
    rvq_size: int = 1024
    pin_zero: bool = True
    ridge_lambda: float = 1e-3
    scale_sigmas: float = 3.0
    kmeans_max_iter: int = 100
    kmeans_tol: float = 1e-6
    min_frame_ratio: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "fsq_levels", tuple(int(level) for level in self.fsq_levels))
        if self.embedding_dim < 1:
            raise CodecModelError(f"embedding_dim must be >= 1, got {self.embedding_dim}")
        if not self.fsq_levels or self.embedding_dim % len(self.fsq_levels):
            raise CodecModelError(
                f"embedding_dim {self.embedding_dim} is not a multiple of the FSQ group width "
                f"{len(self.fsq_levels)}"
            )
        if self.rvq_stages < 1 or self.rvq_size < 1:
            raise CodecModelError("rvq_stages and rvq_size must be >= 1")
        if self.ridge_lambda < 0:
            raise CodecModelError(f"ridge_lambda must be >= 0, got {self.ridge_lambda}")
        if self.scale_sigmas <= 0:
            raise CodecModelError(f"scale_sigmas must be positive, got {self.scale_sigmas}")
        if self.min_frame_ratio <= 0:
            raise CodecModelError(f"min_frame_ratio must be positive, got {self.min_frame_ratio}")

    def fsq_spec(self) -> FsqSpec:
        return FsqSpec.from_group_levels(self.fsq_levels, self.embedding_dim // len(self.fsq_levels))


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class FeatureNormalizer:
    """Per-mel-bin mean and standard deviation."""
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean, std = _frozen(self.mean), _frozen(self.std)
        if mean.ndim != 1 or mean.shape != std.shape:
            raise CodecModelError(f"normalizer mean {mean.shape} and std {std.shape} must be equal 1-D")
        if np.any(std < STD_FLOOR) or not np.all(np.isfinite(mean)):
            raise CodecModelError(f"normalizer std must be >= {STD_FLOOR} and mean finite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    def normalize(self, values: np.ndarray) -> np.ndarray:
        return (values - self.mean) / self.std

    def denormalize(self, values: np.ndarray) -> np.ndarray:
        return values * self.std + self.mean


@dataclass(frozen=True, eq=False)
class AnalysisProjection:
    """
    Affine map from normalised log-mel to the bounded embedding.

    Attributes:
        matrix: Array [embedding_dim x n_mels]
        bias: Array [embedding_dim]
        scale: Positive divisor per embedding dimension, applied before tanh
    """
    matrix: np.ndarray
    bias: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        matrix, bias, scale = _frozen(self.matrix), _frozen(self.bias), _frozen(self.scale)
        if matrix.ndim != 2 or bias.shape != (matrix.shape[0],) or scale.shape != bias.shape:
            raise CodecModelError(
                f"inconsistent projection shapes {matrix.shape}, {bias.shape}, {scale.shape}"
            )
        if np.any(scale <= 0) or not all(np.all(np.isfinite(a)) for a in (matrix, bias, scale)):
            raise CodecModelError("projection must be finite with positive scales")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "bias", bias)
        object.__setattr__(self, "scale", scale)

    def embed(self, normalized: np.ndarray) -> np.ndarray:
        return np.tanh((normalized @ self.matrix.T + self.bias) / self.scale)


@dataclass(frozen=True, eq=False)
class SynthesisMap:
    """
    Affine map from quantized embedding to normalised log-mel.

    Attributes:
        matrix: Array [n_mels x embedding_dim]
        bias: Array [n_mels]
    """
    matrix: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        matrix, bias = _frozen(self.matrix), _frozen(self.bias)
        if matrix.ndim != 2 or bias.shape != (matrix.shape[0],):
            raise CodecModelError(f"inconsistent synthesis shapes {matrix.shape} and {bias.shape}")
        if not (np.all(np.isfinite(matrix)) and np.all(np.isfinite(bias))):
            raise CodecModelError("synthesis map contains non-finite entries")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "bias", bias)

    def apply(self, embedding: np.ndarray) -> np.ndarray:
        return embedding @ self.matrix.T + self.bias


@dataclass(frozen=True, eq=False)
class CodecModel:
    """
    Immutable fitted codec.

    Exactly one of ``fsq_spec`` / ``rvq_codebooks`` is set for the quantized
    variants; the unquantized variant carries neither.
    """
    variant: QuantizerVariant
    sample_rate: int
    spec_cfg: SpectrogramConfig
    mel_cfg: MelConfig
    normalizer: FeatureNormalizer
    projection: AnalysisProjection
    synthesis: SynthesisMap
    fsq_spec: Optional[FsqSpec] = None
    rvq_codebooks: Optional[RvqCodebooks] = None
    ridge_lambda: float = 1e-3
    format_version: int = MODEL_FORMAT_VERSION
    _quantizer: Optional[QuantizerInterface] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "variant", QuantizerVariant(self.variant))
        object.__setattr__(self, "mel_cfg", self.mel_cfg.resolve(self.sample_rate))
        n_mels = self.mel_cfg.n_mels
        dim = self.projection.matrix.shape[0]
        if self.normalizer.mean.shape != (n_mels,) or self.projection.matrix.shape[1] != n_mels:
            raise CodecModelError(f"analysis maps do not match n_mels={n_mels}")
        if self.synthesis.matrix.shape != (n_mels, dim):
            raise CodecModelError(
                f"synthesis map {self.synthesis.matrix.shape} does not match ({n_mels}, {dim})"
            )
        if self.variant is QuantizerVariant.FSQ:
            if self.fsq_spec is None or self.rvq_codebooks is not None:
                raise CodecModelError("FSQ model must carry an FSQ spec and no RVQ codebooks")
            if self.fsq_spec.dims != dim:
                raise CodecModelError(f"FSQ spec has {self.fsq_spec.dims} dims, embedding has {dim}")
            quantizer: Optional[QuantizerInterface] = FsqQuantizer(self.fsq_spec)
        elif self.variant is QuantizerVariant.RVQ:
            if self.rvq_codebooks is None or self.fsq_spec is not None:
                raise CodecModelError("RVQ model must carry RVQ codebooks and no FSQ spec")
            if self.rvq_codebooks.dim != dim:
                raise CodecModelError(f"RVQ codebooks have d={self.rvq_codebooks.dim}, embedding has {dim}")
            quantizer = RvqQuantizer(self.rvq_codebooks)
        else:
            if self.fsq_spec is not None or self.rvq_codebooks is not None:
                raise CodecModelError("unquantized model cannot carry quantizer data")
            quantizer = None
        object.__setattr__(self, "_quantizer", quantizer)

    @property
    def quantizer(self) -> Optional[QuantizerInterface]:
        return self._quantizer

    @property
    def embedding_dim(self) -> int:
        return int(self.projection.matrix.shape[0])

    @property
    def num_codebooks(self) -> int:
        return self._quantizer.num_codebooks if self._quantizer else 0

    @property
    def codebook_size(self) -> int:
        """Largest codebook size in use, 0 when unquantized."""
        return max(self._quantizer.codebook_sizes) if self._quantizer else 0

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.spec_cfg.hop_length

    def embed(self, values: np.ndarray) -> np.ndarray:
        """Bounded embeddings [frames x embedding_dim] of raw log-mel values."""
        return self.projection.embed(self.normalizer.normalize(values))

    def synthesize(self, embedding: np.ndarray) -> np.ndarray:
        """Log-mel values [frames x n_mels] from (quantized) embeddings."""
        return self.normalizer.denormalize(self.synthesis.apply(embedding))


def _stack_frames(mels: Sequence[MelFrames]) -> Tuple[np.ndarray, MelFrames]:
    if not mels:
        raise CodecModelError("cannot fit a codec on an empty corpus")
    first = mels[0]
    for mel in mels[1:]:
        if mel.sample_rate != first.sample_rate:
            raise CodecModelError(
                f"corpus mixes sample rates {first.sample_rate} Hz and {mel.sample_rate} Hz"
            )
        if mel.spec_cfg != first.spec_cfg or mel.mel_cfg != first.mel_cfg:
            raise CodecModelError("corpus features were computed with different configurations")
    return np.concatenate([mel.values for mel in mels], axis=0), first


def _principal_components(normalized: np.ndarray, dim: int, varying: np.ndarray) -> np.ndarray:
    # constant features contribute exactly nothing, not their rounding residue
    live = np.where(varying, normalized, 0.0)
    covariance = live.T @ live / live.shape[0]
    rank = int(np.linalg.matrix_rank(covariance, hermitian=True))
    if rank < dim:
        raise CodecModelError(
            f"degenerate feature covariance: rank {rank} < {dim} required embedding dimensions"
        )
    eigvals, eigvecs = linalg.eigh(covariance)
    order = np.argsort(eigvals)[::-1][:dim]
    components = eigvecs[:, order].T
    # deterministic sign: largest-magnitude loading of each component is positive
    pivots = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(dim), pivots])
    return components * signs[:, None]


def _ridge(inputs: np.ndarray, targets: np.ndarray, lam: float) -> SynthesisMap:
    n = inputs.shape[0]
    input_mean = inputs.mean(axis=0)
    target_mean = targets.mean(axis=0)
    centered_in = inputs - input_mean
    centered_out = targets - target_mean
    gram = centered_in.T @ centered_in / n + lam * np.eye(inputs.shape[1])
    try:
        weights = linalg.solve(gram, centered_in.T @ centered_out / n, assume_a="sym")
    except linalg.LinAlgError as e:
        raise CodecModelError(f"synthesis regression is singular: {e}") from e
    return SynthesisMap(weights.T, target_mean - input_mean @ weights)


def _required_frames(variant: QuantizerVariant, options: CodecOptions) -> int:
    if variant is QuantizerVariant.FSQ:
        largest = max(options.fsq_spec().codebook_sizes)
    elif variant is QuantizerVariant.RVQ:
        largest = options.rvq_size
    else:
        largest = options.embedding_dim
    return int(np.ceil(options.min_frame_ratio * largest))


def fit_codec_from_mels(
    mels: Sequence[MelFrames],
    variant: QuantizerVariant = QuantizerVariant.FSQ,
    seed: int = 0,
    options: Optional[CodecOptions] = None,
    show_progress: bool = False,
) -> CodecModel:
    """
    Fit a codec on precomputed log-mel features.

    Args:
        mels: Features of every corpus clip, all under one configuration
        variant: Quantizer variant
        seed: Seed for RVQ codebook training
        options: Fitting tunables
        show_progress: Display tqdm bars while training RVQ stages

    Returns:
        CodecModel: Fitted model; identical for identical inputs and seed

    Raises:
        CodecModelError: On an empty or inconsistent corpus, a rank-deficient
            covariance, or fewer frames than the largest codebook requires
    """
    variant = QuantizerVariant(variant)
    options = options or CodecOptions()
    values, first = _stack_frames(mels)
    n_frames, n_mels = values.shape
    dim = options.embedding_dim
    if dim > n_mels:
        raise CodecModelError(f"embedding_dim {dim} exceeds n_mels {n_mels}")
    logger.info(f"Fitting {variant.value} codec on {n_frames} frames")

    spread = values.std(axis=0)
    normalizer = FeatureNormalizer(values.mean(axis=0), np.maximum(spread, STD_FLOOR))
    normalized = normalizer.normalize(values)
    components = _principal_components(normalized, dim, spread >= STD_FLOOR)

    required = _required_frames(variant, options)
    if n_frames < required:
        raise CodecModelError(
            f"corpus has {n_frames} frames, {variant.value} codec needs at least {required}"
        )

    bias = -(normalized.mean(axis=0) @ components.T)
    projected = normalized @ components.T + bias
    scale = options.scale_sigmas * projected.std(axis=0)
    projection = AnalysisProjection(components, bias, scale)
    embedding = projection.embed(normalized)

    fsq_spec = None
    codebooks = None
    if variant is QuantizerVariant.FSQ:
        fsq_spec = options.fsq_spec()
        quantized = FsqQuantizer(fsq_spec).quantize(embedding)
    elif variant is QuantizerVariant.RVQ:
        codebooks = rvq_train(
            embedding,
            stages=options.rvq_stages,
            codebook_size=options.rvq_size,
            seed=seed,
            pin_zero=options.pin_zero,
            max_iter=options.kmeans_max_iter,
            tol=options.kmeans_tol,
            show_progress=show_progress,
        )
        quantized = RvqQuantizer(codebooks).quantize(embedding)
    else:
        quantized = embedding

    synthesis = _ridge(quantized, normalized, options.ridge_lambda)
    logger.info(f"Codec fitted: {dim}-dim bottleneck, ridge lambda {options.ridge_lambda}")
    return CodecModel(
        variant=variant,
        sample_rate=first.sample_rate,
        spec_cfg=first.spec_cfg,
        mel_cfg=first.mel_cfg,
        normalizer=normalizer,
        projection=projection,
        synthesis=synthesis,
        fsq_spec=fsq_spec,
        rvq_codebooks=codebooks,
        ridge_lambda=options.ridge_lambda,
    )


def fit_codec(
    corpus: Sequence[AudioBuffer],
    variant: QuantizerVariant = QuantizerVariant.FSQ,
    seed: int = 0,
    options: Optional[CodecOptions] = None,
    spec_cfg: Optional[SpectrogramConfig] = None,
    mel_cfg: Optional[MelConfig] = None,
) -> CodecModel:
    """
    Fit a codec on a corpus of waveforms.

    Args:
        corpus: Clips sharing one sample rate
        variant: Quantizer variant
        seed: Seed for RVQ codebook training
        options: Fitting tunables
        spec_cfg: STFT configuration (defaults to 2048/2048/512)
        mel_cfg: Mel configuration (defaults to 80 HTK bands)

    Returns:
        CodecModel: Fitted model
    """
    if not corpus:
        raise CodecModelError("cannot fit a codec on an empty corpus")
    rates = sorted({audio.sample_rate for audio in corpus})
    if len(rates) > 1:
        raise CodecModelError(f"corpus mixes sample rates {rates}")
    mels = [log_mel(audio, spec_cfg, mel_cfg) for audio in corpus]
    return fit_codec_from_mels(mels, variant, seed, options)


def compute_fit_stats(model: CodecModel, mels: Sequence[MelFrames]) -> Dict:
    """
    Embedding and codebook statistics of a model over a set of clips.

    Returns:
        dict: frames, embedding mean/std, saturation fraction and, for quantized
        variants, per-codebook usage
    """
    values, _ = _stack_frames(mels)
    embedding = model.embed(values)
    stats: Dict = {
        "variant": model.variant.value,
        "frames": int(values.shape[0]),
        "embedding_dim": model.embedding_dim,
        "embedding_mean": float(embedding.mean()),
        "embedding_std": float(embedding.std()),
        "saturation": float(np.mean(np.abs(embedding) > SATURATION_LEVEL)),
    }
    if model.quantizer is not None:
        tokens = model.quantizer.encode(embedding)
        usage: List[Dict] = codebook_usage(tokens, model.quantizer.codebook_sizes)
        stats["codebooks"] = usage
    return stats
