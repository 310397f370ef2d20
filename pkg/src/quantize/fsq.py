"""
Finite scalar quantization with grouped mixed-radix codebooks.

Each embedding dimension is rounded to a uniform grid inside [-1, 1]. A group
of dimensions forms one codebook whose index is the mixed-radix number built
from the per-dimension grid positions, first dimension most significant.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Tuple, Union

import numpy as np

from src.exceptions import QuantizationError
from src.interfaces import QuantizerInterface

logger = logging.getLogger(__name__)

RANGE_TOLERANCE = 1e-9
DEFAULT_GROUP_LEVELS = (8, 5, 5, 5)
DEFAULT_NUM_GROUPS = 8


@dataclass(frozen=True, eq=False)
class FsqGrid:
    """
    Sorted grid of L values in [-1, 1] with uniform spacing.

    Attributes:
        levels: Level count L
        values: Read-only array of L grid values
    """
    levels: int
    values: np.ndarray

    @property
    def step(self) -> float:
        return float(self.values[1] - self.values[0])


@lru_cache(maxsize=None)
def fsq_grid(levels: int) -> FsqGrid:
    """
    Build the grid for a level count.

    Odd L spans [-1, 1] symmetrically; even L uses step 2/L from -1 + 2/L up to 1,
    which for L=8 gives [-0.75, ..., 1.0].

    Args:
        levels: Level count L (>= 2)

    Returns:
        FsqGrid: The grid

    Raises:
        QuantizationError: If L < 2
    """
    levels = int(levels)
    if levels < 2:
        raise QuantizationError(f"FSQ level count must be >= 2, got {levels}")
    positions = np.arange(levels, dtype=np.float64)
    if levels % 2:
        values = (positions - (levels - 1) / 2) * (2.0 / (levels - 1))
    else:
        values = (positions - (levels / 2 - 1)) * (2.0 / levels)
    values.setflags(write=False)
    return FsqGrid(levels, values)


@dataclass(frozen=True)
class FsqSpec:
    """
    Per-dimension level counts and their grouping into codebooks.

    Attributes:
        levels: Level count of every embedding dimension
        groups: Partition of dimension indices; each group is one codebook
    """
    levels: Tuple[int, ...]
    groups: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        levels = tuple(int(level) for level in self.levels)
        groups = tuple(tuple(int(d) for d in group) for group in self.groups)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "groups", groups)
        if not levels:
            raise QuantizationError("FSQ spec needs at least one dimension")
        bad = [level for level in levels if level < 2]
        if bad:
            raise QuantizationError(f"FSQ level counts must be >= 2, got {bad}")
        if not groups or any(not group for group in groups):
            raise QuantizationError("FSQ groups must be non-empty")
        flat = sorted(d for group in groups for d in group)
        if flat != list(range(len(levels))):
            raise QuantizationError(
                f"FSQ groups must partition dimensions 0..{len(levels) - 1} exactly, got {groups}"
            )

    @classmethod
    def from_group_levels(
        cls,
        group_levels: Sequence[int] = DEFAULT_GROUP_LEVELS,
        num_groups: int = DEFAULT_NUM_GROUPS,
    ) -> "FsqSpec":
        """
        Repeat one group layout over contiguous blocks of dimensions.

        Args:
            group_levels: Level counts of the dimensions in each group
            num_groups: Number of codebooks

        Returns:
            FsqSpec: Spec with len(group_levels) * num_groups dimensions
        """
        group_levels = tuple(int(level) for level in group_levels)
        width = len(group_levels)
        if width == 0 or num_groups < 1:
            raise QuantizationError("FSQ layout needs at least one group of one dimension")
        groups = tuple(tuple(range(g * width, (g + 1) * width)) for g in range(num_groups))
        return cls(group_levels * num_groups, groups)

    @property
    def dims(self) -> int:
        return len(self.levels)

    @property
    def num_codebooks(self) -> int:
        return len(self.groups)

    def group_levels(self, group: int) -> Tuple[int, ...]:
        return tuple(self.levels[d] for d in self.groups[group])

    @property
    def codebook_sizes(self) -> Tuple[int, ...]:
        return tuple(int(np.prod(self.group_levels(g))) for g in range(self.num_codebooks))


def _grid_table(levels: Tuple[int, ...]) -> np.ndarray:
    width = max(levels)
    table = np.full((len(levels), width), np.nan)
    for d, level in enumerate(levels):
        table[d, :level] = fsq_grid(level).values
    return table


def _radix_weights(levels: Sequence[int]) -> np.ndarray:
    weights = np.ones(len(levels), dtype=np.int64)
    for i in range(len(levels) - 2, -1, -1):
        weights[i] = weights[i + 1] * int(levels[i + 1])
    return weights


def fsq_index(digits: Union[Sequence[int], np.ndarray], levels: Sequence[int]) -> Union[int, np.ndarray]:
    """
    Compose grid positions into a mixed-radix codebook index.

    Args:
        digits: Positions [..., n] with 0 <= digit_i < L_i
        levels: Level counts (L_1..L_n), first most significant

    Returns:
        int or np.ndarray: Index in [0, prod(L)); int for a single digit vector

    Raises:
        QuantizationError: If a digit is out of range
    """
    levels = tuple(int(level) for level in levels)
    array = np.asarray(digits, dtype=np.int64)
    if array.shape[-1:] != (len(levels),):
        raise QuantizationError(f"expected {len(levels)} digits, got shape {array.shape}")
    bounds = np.asarray(levels, dtype=np.int64)
    if np.any(array < 0) or np.any(array >= bounds):
        raise QuantizationError(f"digits {array.tolist()} out of range for levels {list(levels)}")
    index = array @ _radix_weights(levels)
    return int(index) if array.ndim == 1 else index


def fsq_digits(index: Union[int, np.ndarray], levels: Sequence[int]) -> np.ndarray:
    """
    Split a mixed-radix index into per-dimension grid positions.

    Args:
        index: Index (or array of indices) in [0, prod(L))
        levels: Level counts, first most significant

    Returns:
        np.ndarray: Digits [..., n]

    Raises:
        QuantizationError: If the index is out of range
    """
    levels = tuple(int(level) for level in levels)
    array = np.asarray(index, dtype=np.int64)
    size = int(np.prod(levels))
    if np.any(array < 0) or np.any(array >= size):
        raise QuantizationError(f"index out of range [0, {size}) for levels {list(levels)}")
    digits = np.empty(array.shape + (len(levels),), dtype=np.int64)
    remainder = array.copy()
    for i in range(len(levels) - 1, -1, -1):
        digits[..., i] = remainder % levels[i]
        remainder = remainder // levels[i]
    return digits


def _positions(v: np.ndarray, spec: FsqSpec) -> np.ndarray:
    lows = np.array([fsq_grid(level).values[0] for level in spec.levels])
    steps = np.array([fsq_grid(level).step for level in spec.levels])
    tops = np.asarray(spec.levels, dtype=np.int64) - 1
    # floor(x + 0.5) sends exact midpoints to the larger grid value
    raw = np.floor((v - lows) / steps + 0.5).astype(np.int64)
    return np.clip(raw, 0, tops)


def fsq_quantize(v: np.ndarray, spec: FsqSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    Snap bounded values to their grids and compute per-group indices.

    Args:
        v: Values [..., dims], every component in [-1, 1]
        spec: FSQ layout

    Returns:
        Tuple[np.ndarray, np.ndarray]: Quantized values [..., dims] and indices [..., groups]

    Raises:
        QuantizationError: If a component lies outside [-1, 1] beyond 1e-9 or the width is wrong
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape[-1:] != (spec.dims,):
        raise QuantizationError(f"expected {spec.dims} dimensions, got shape {v.shape}")
    if not np.all(np.isfinite(v)) or np.any(np.abs(v) > 1.0 + RANGE_TOLERANCE):
        raise QuantizationError("FSQ input must be finite and within [-1, 1]")
    v = np.clip(v, -1.0, 1.0)
    digits = _positions(v, spec)
    table = _grid_table(spec.levels)
    q = np.take_along_axis(
        np.broadcast_to(table, v.shape + (table.shape[1],)), digits[..., None], axis=-1
    )[..., 0]
    indices = np.stack(
        [fsq_index(digits[..., list(group)], spec.group_levels(g)) for g, group in enumerate(spec.groups)],
        axis=-1,
    )
    return q, np.asarray(indices, dtype=np.int64)


def fsq_dequantize(indices: np.ndarray, spec: FsqSpec) -> np.ndarray:
    """
    Concatenate the grid values selected by per-group indices.

    Args:
        indices: Integer array [..., groups]
        spec: FSQ layout

    Returns:
        np.ndarray: Quantized values [..., dims]

    Raises:
        QuantizationError: If an index exceeds its group's codebook size
    """
    indices = np.asarray(indices, dtype=np.int64)
    if indices.shape[-1:] != (spec.num_codebooks,):
        raise QuantizationError(f"expected {spec.num_codebooks} indices, got shape {indices.shape}")
    table = _grid_table(spec.levels)
    out = np.empty(indices.shape[:-1] + (spec.dims,))
    for g, group in enumerate(spec.groups):
        digits = fsq_digits(indices[..., g], spec.group_levels(g))
        for j, d in enumerate(group):
            out[..., d] = table[d, digits[..., j]]
    return out


class FsqQuantizer(QuantizerInterface):
    """
    QuantizerInterface adapter over an FsqSpec.
    """
    def __init__(self, spec: FsqSpec):
        self.spec = spec

    @property
    def num_codebooks(self) -> int:
        return self.spec.num_codebooks

    @property
    def codebook_sizes(self) -> Tuple[int, ...]:
        return self.spec.codebook_sizes

    @property
    def dim(self) -> int:
        return self.spec.dims

    def encode(self, embeddings: np.ndarray) -> np.ndarray:
        return fsq_quantize(embeddings, self.spec)[1]

    def decode(self, indices: np.ndarray) -> np.ndarray:
        return fsq_dequantize(indices, self.spec)

    def quantize(self, embeddings: np.ndarray) -> np.ndarray:
        return fsq_quantize(embeddings, self.spec)[0]
