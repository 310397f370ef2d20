from typing import Sequence

import numpy as np


def codebook_usage(tokens: np.ndarray, codebook_sizes: Sequence[int]) -> list:
    """
    Per-codebook utilisation of a token matrix.

    Args:
        tokens: Integer array [frames x codebooks]
        codebook_sizes: Size of every codebook

    Returns:
        list: One dict per codebook with ``used`` (distinct codes seen),
        ``size`` and ``perplexity`` (exp of the code-distribution entropy)
    """
    tokens = np.asarray(tokens, dtype=np.int64)
    usage = []
    for c, size in enumerate(codebook_sizes):
        counts = np.bincount(tokens[:, c], minlength=size) if tokens.shape[0] else np.zeros(size)
        total = counts.sum()
        if total:
            p = counts[counts > 0] / total
            perplexity = float(np.exp(-np.sum(p * np.log(p))))
        else:
            perplexity = 0.0
        usage.append({"used": int(np.count_nonzero(counts)), "size": int(size), "perplexity": perplexity})
    return usage
