import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import kmeans_plusplus

from src.exceptions import QuantizationError

logger = logging.getLogger(__name__)

DISTANCE_CHUNK = 4096


@dataclass
class KMeansResult:
    """
    Outcome of a k-means run.

    Attributes:
        centroids: Array [k x d]
        labels: Assignment of every point
        inertia: Sum of squared distances to the assigned centroids
        iterations: Lloyd iterations performed
    """
    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    iterations: int


def nearest_codewords(points: np.ndarray, codewords: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Exact nearest-codeword search; ties go to the lowest index.

    Args:
        points: Array [n x d]
        codewords: Array [k x d]

    Returns:
        Tuple[np.ndarray, np.ndarray]: Indices [n] and squared distances [n]
    """
    indices = np.empty(points.shape[0], dtype=np.int64)
    distances = np.empty(points.shape[0])
    for start in range(0, points.shape[0], DISTANCE_CHUNK):
        block = cdist(points[start:start + DISTANCE_CHUNK], codewords, metric="sqeuclidean")
        best = np.argmin(block, axis=1)
        indices[start:start + DISTANCE_CHUNK] = best
        distances[start:start + DISTANCE_CHUNK] = block[np.arange(block.shape[0]), best]
    return indices, distances


def kmeans(
    points: np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
    tol: float = 1e-6,
) -> KMeansResult:
    """
    Lloyd's algorithm with k-means++ seeding.

    Empty clusters are reseeded with the points farthest from their current
    centroid. Iteration stops when the relative inertia change drops below
    ``tol`` or after ``max_iter`` rounds. The result depends only on the
    data and the seed.

    Args:
        points: Array [n x d] with n >= k
        k: Number of clusters
        seed: Seed for the k-means++ initialisation
        max_iter: Iteration cap
        tol: Relative inertia tolerance

    Returns:
        KMeansResult: Centroids, labels and inertia

    Raises:
        QuantizationError: If there are fewer points than clusters
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise QuantizationError(f"k-means expects a 2-D array, got shape {points.shape}")
    if points.shape[0] < k:
        raise QuantizationError(f"k-means needs at least k={k} points, got {points.shape[0]}")

    centroids, _ = kmeans_plusplus(points, n_clusters=k, random_state=seed)
    centroids = np.asarray(centroids, dtype=np.float64)
    labels, distances = nearest_codewords(points, centroids)
    inertia = float(distances.sum())

    iteration = 0
    for iteration in range(1, max_iter + 1):
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, points)
        counts = np.bincount(labels, minlength=k)
        filled = counts > 0
        centroids = centroids.copy()
        centroids[filled] = sums[filled] / counts[filled, None]
        empty = np.flatnonzero(~filled)
        if empty.size:
            farthest = np.argsort(-distances, kind="stable")[:empty.size]
            centroids[empty] = points[farthest]
            logger.debug(f"k-means: reseeded {empty.size} empty clusters")

        labels, distances = nearest_codewords(points, centroids)
        previous, inertia = inertia, float(distances.sum())
        logger.debug(f"k-means iteration {iteration}: inertia {inertia:.6g}")
        if inertia == 0.0 or previous == 0.0:
            break
        if abs(previous - inertia) / previous < tol:
            break

    return KMeansResult(centroids, labels, inertia, iteration)
