from src.quantize.fsq import (
    FsqGrid,
    FsqQuantizer,
    FsqSpec,
    fsq_dequantize,
    fsq_digits,
    fsq_grid,
    fsq_index,
    fsq_quantize,
)
from src.quantize.kmeans import KMeansResult, kmeans, nearest_codewords
from src.quantize.rvq import RvqCodebooks, RvqQuantizer, rvq_decode, rvq_encode, rvq_train
from src.quantize.stats import codebook_usage

__all__ = [
    "FsqGrid",
    "FsqQuantizer",
    "FsqSpec",
    "KMeansResult",
    "RvqCodebooks",
    "RvqQuantizer",
    "codebook_usage",
    "fsq_dequantize",
    "fsq_digits",
    "fsq_grid",
    "fsq_index",
    "fsq_quantize",
    "kmeans",
    "nearest_codewords",
    "rvq_decode",
    "rvq_encode",
    "rvq_train",
]
