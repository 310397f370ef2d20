"""
Residual vector quantization.

Stage s quantizes what the previous stages left over; decoding sums the
selected codewords, so any prefix of the index vector is a coarser
reconstruction.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from tqdm import tqdm

from src.exceptions import QuantizationError
from src.interfaces import QuantizerInterface
from src.quantize.kmeans import kmeans, nearest_codewords

logger = logging.getLogger(__name__)

DEFAULT_STAGES = 8
DEFAULT_CODEBOOK_SIZE = 1024


@dataclass(frozen=True, eq=False)
class RvqCodebooks:
    """
    Ordered codeword matrices, one per stage.

    Attributes:
        stages: Read-only arrays [K x d], identical shape for every stage
    """
    stages: Tuple[np.ndarray, ...]

    def __post_init__(self):
        stages = tuple(np.array(stage, dtype=np.float64) for stage in self.stages)
        if not stages:
            raise QuantizationError("RVQ needs at least one stage")
        shape = stages[0].shape
        if len(shape) != 2 or shape[0] < 1 or shape[1] < 1:
            raise QuantizationError(f"codebooks must be [K x d] matrices, got {shape}")
        for s, stage in enumerate(stages):
            if stage.shape != shape:
                raise QuantizationError(f"stage {s} has shape {stage.shape}, expected {shape}")
            if not np.all(np.isfinite(stage)):
                raise QuantizationError(f"stage {s} contains non-finite codewords")
            stage.setflags(write=False)
        object.__setattr__(self, "stages", stages)

    @property
    def num_stages(self) -> int:
        return len(self.stages)

    @property
    def codebook_size(self) -> int:
        return int(self.stages[0].shape[0])

    @property
    def dim(self) -> int:
        return int(self.stages[0].shape[1])


def rvq_encode(v: np.ndarray, cb: RvqCodebooks, num_stages: Optional[int] = None) -> np.ndarray:
    """
    Greedy residual encoding.

    Args:
        v: Vector [d] or batch [..., d]
        cb: Codebooks
        num_stages: Encode with only the first n stages (default: all)

    Returns:
        np.ndarray: Indices [..., n]

    Raises:
        QuantizationError: On dimension mismatch or non-finite input
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1:] != (cb.dim,):
        raise QuantizationError(f"expected vectors of dimension {cb.dim}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise QuantizationError("RVQ input must be finite")
    stages = cb.num_stages if num_stages is None else int(num_stages)
    if not 1 <= stages <= cb.num_stages:
        raise QuantizationError(f"num_stages must be in [1, {cb.num_stages}], got {stages}")

    residual = v.reshape(-1, cb.dim).copy()
    indices = np.empty((residual.shape[0], stages), dtype=np.int64)
    for s in range(stages):
        chosen, _ = nearest_codewords(residual, cb.stages[s])
        indices[:, s] = chosen
        residual -= cb.stages[s][chosen]
    return indices.reshape(v.shape[:-1] + (stages,))


def rvq_decode(indices: np.ndarray, cb: RvqCodebooks) -> np.ndarray:
    """
    Sum the selected codewords.

    Passing fewer indices than stages decodes the leading stages only.

    Args:
        indices: Integer array [..., n] with n <= number of stages
        cb: Codebooks

    Returns:
        np.ndarray: Reconstruction [..., d]

    Raises:
        QuantizationError: If an index is >= K or too many stages are given
    """
    indices = np.asarray(indices, dtype=np.int64)
    stages = indices.shape[-1] if indices.ndim else 0
    if not 1 <= stages <= cb.num_stages:
        raise QuantizationError(f"expected 1..{cb.num_stages} indices per vector, got shape {indices.shape}")
    if np.any(indices < 0) or np.any(indices >= cb.codebook_size):
        raise QuantizationError(f"RVQ index out of range [0, {cb.codebook_size})")
    out = np.zeros(indices.shape[:-1] + (cb.dim,))
    for s in range(stages):
        out += cb.stages[s][indices[..., s]]
    return out


def _pin_zero(centroids: np.ndarray) -> np.ndarray:
    pinned = centroids.copy()
    pinned[np.argmin(np.einsum("kd,kd->k", centroids, centroids))] = 0.0
    return pinned


def rvq_train(
    frames: np.ndarray,
    stages: int = DEFAULT_STAGES,
    codebook_size: int = DEFAULT_CODEBOOK_SIZE,
    seed: int = 0,
    pin_zero: bool = True,
    max_iter: int = 100,
    tol: float = 1e-6,
    show_progress: bool = False,
) -> RvqCodebooks:
    """
    Train residual codebooks with sequential k-means.

    Each stage clusters the current residuals, then its assigned codewords are
    subtracted to form the next stage's residuals. With ``pin_zero`` the
    centroid closest to the origin is replaced by the zero vector, so adding a
    stage never increases the reconstruction error.

    Args:
        frames: Training vectors [N x d], N >= codebook_size
        stages: Number of stages
        codebook_size: Codewords per stage (K)
        seed: Seed for the k-means++ initialisations
        pin_zero: Put the zero vector in every stage's codebook
        max_iter: k-means iteration cap per stage
        tol: Relative inertia tolerance
        show_progress: Display a tqdm bar over stages

    Returns:
        RvqCodebooks: Trained codebooks

    Raises:
        QuantizationError: If N < K or the data is not finite
    """
    frames = np.asarray(frames, dtype=np.float64)
    if frames.ndim != 2:
        raise QuantizationError(f"training frames must be [N x d], got shape {frames.shape}")
    if frames.shape[0] < codebook_size:
        raise QuantizationError(
            f"RVQ training needs at least K={codebook_size} frames, got {frames.shape[0]}"
        )
    if not np.all(np.isfinite(frames)):
        raise QuantizationError("RVQ training frames must be finite")
    if stages < 1:
        raise QuantizationError(f"stages must be >= 1, got {stages}")

    residual = frames.copy()
    codebooks = []
    for s in tqdm(range(stages), desc="Training RVQ stages", unit="stage", disable=not show_progress):
        result = kmeans(residual, codebook_size, seed=seed + s, max_iter=max_iter, tol=tol)
        centroids = _pin_zero(result.centroids) if pin_zero else result.centroids
        chosen, _ = nearest_codewords(residual, centroids)
        residual = residual - centroids[chosen]
        codebooks.append(centroids)
        logger.info(
            f"RVQ stage {s + 1}/{stages}: {result.iterations} k-means iterations, "
            f"residual RMS {np.sqrt(np.mean(residual ** 2)):.5f}"
        )
    return RvqCodebooks(tuple(codebooks))


class RvqQuantizer(QuantizerInterface):
    """
    QuantizerInterface adapter over RvqCodebooks.
    """
    def __init__(self, codebooks: RvqCodebooks):
        self.codebooks = codebooks

    @property
    def num_codebooks(self) -> int:
        return self.codebooks.num_stages

    @property
    def codebook_sizes(self) -> Tuple[int, ...]:
        return (self.codebooks.codebook_size,) * self.codebooks.num_stages

    @property
    def dim(self) -> int:
        return self.codebooks.dim

    def encode(self, embeddings: np.ndarray) -> np.ndarray:
        return rvq_encode(embeddings, self.codebooks)

    def decode(self, indices: np.ndarray) -> np.ndarray:
        return rvq_decode(indices, self.codebooks)
