import numpy as np
import pytest

from src.exceptions import QuantizationError
from src.quantize.kmeans import kmeans, nearest_codewords
from src.quantize.rvq import RvqCodebooks, RvqQuantizer, rvq_decode, rvq_encode, rvq_train
from src.quantize.stats import codebook_usage


def _planted(k: int = 8, dim: int = 4, copies: int = 20, seed: int = 3):
    rng = np.random.default_rng(seed)
    centroids = rng.uniform(-5, 5, size=(k, dim))
    points = np.repeat(centroids, copies, axis=0)
    return centroids, points[rng.permutation(points.shape[0])]


def _set_distance(a: np.ndarray, b: np.ndarray) -> float:
    _, forward = nearest_codewords(a, b)
    _, backward = nearest_codewords(b, a)
    return float(np.sqrt(max(forward.max(), backward.max())))


def test_kmeans_recovers_planted_centroids():
    centroids, points = _planted()
    result = kmeans(points, 8, seed=0)
    assert _set_distance(result.centroids, centroids) < 1e-9
    assert result.inertia < 1e-12


def test_rvq_train_recovers_planted_centroids():
    centroids, points = _planted()
    codebooks = rvq_train(points, stages=1, codebook_size=8, seed=0, pin_zero=False)
    assert _set_distance(codebooks.stages[0], centroids) < 1e-9


def test_exactly_k_distinct_points_are_recovered():
    rng = np.random.default_rng(21)
    points = rng.uniform(-3, 3, size=(16, 5))
    codebooks = rvq_train(points, stages=1, codebook_size=16, seed=4, pin_zero=False)
    assert _set_distance(codebooks.stages[0], points) < 1e-9
    np.testing.assert_allclose(rvq_decode(rvq_encode(points, codebooks), codebooks), points, atol=1e-9)


def test_scalar_codebook_picks_nearest_and_leaves_residual():
    codebooks = RvqCodebooks((np.array([[-1.0], [1.0]]),))
    indices = rvq_encode(np.array([0.2]), codebooks)
    assert indices.tolist() == [1]
    assert 0.2 - rvq_decode(indices, codebooks)[0] == pytest.approx(-0.8)


def test_first_stage_shrinks_clustered_residuals():
    rng = np.random.default_rng(8)
    centres = rng.uniform(-5, 5, size=(8, 4))
    v = np.repeat(centres, 50, axis=0) + 0.3 * rng.standard_normal((400, 4))
    codebooks = rvq_train(v, stages=2, codebook_size=8, seed=0)
    indices = rvq_encode(v, codebooks)
    rms = [np.sqrt(np.mean((v - rvq_decode(indices[:, :s], codebooks)) ** 2)) for s in (1, 2)]
    assert rms[0] < np.sqrt(np.mean(v ** 2))
    assert rms[1] <= rms[0] + 1e-12


def test_kmeans_needs_enough_points():
    with pytest.raises(QuantizationError):
        kmeans(np.zeros((3, 2)), 4)


def test_nearest_codeword_ties_go_to_lowest_index():
    codewords = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 0.0]])
    indices, _ = nearest_codewords(np.array([[1.0, 0.0], [0.5, 0.0]]), codewords)
    assert indices.tolist() == [0, 0]


@pytest.fixture(scope="module")
def trained():
    rng = np.random.default_rng(11)
    return rvq_train(rng.uniform(-1, 1, size=(1000, 8)), stages=4, codebook_size=16, seed=0)


def test_pinned_zero_codeword(trained):
    for stage in trained.stages:
        assert np.any(np.all(stage == 0.0, axis=1))


def test_residual_error_non_increasing_with_stages(trained):
    v = np.random.default_rng(12).uniform(-1, 1, size=(1000, 8))
    indices = rvq_encode(v, trained)
    errors = [np.sum((v - rvq_decode(indices[:, :s], trained)) ** 2, axis=1) for s in range(1, 5)]
    for previous, current in zip(errors, errors[1:]):
        assert np.all(current <= previous + 1e-12)


def test_prefix_encode_matches_prefix_of_full_encode(trained, rng):
    v = rng.uniform(-1, 1, size=(50, 8))
    full = rvq_encode(v, trained)
    np.testing.assert_array_equal(rvq_encode(v, trained, num_stages=2), full[:, :2])


def test_shapes_and_batches(trained, rng):
    v = rng.uniform(-1, 1, size=(2, 3, 8))
    indices = rvq_encode(v, trained)
    assert indices.shape == (2, 3, 4)
    assert indices.max() < 16
    assert rvq_decode(indices, trained).shape == (2, 3, 8)
    assert rvq_encode(v[0, 0], trained).shape == (4,)


def test_decode_rejects_bad_indices(trained):
    with pytest.raises(QuantizationError):
        rvq_decode(np.array([0, 16, 0, 0]), trained)
    with pytest.raises(QuantizationError):
        rvq_decode(np.zeros(5, dtype=np.int64), trained)


def test_encode_rejects_wrong_dimension(trained):
    with pytest.raises(QuantizationError):
        rvq_encode(np.zeros(7), trained)


def test_training_is_deterministic():
    data = np.random.default_rng(5).standard_normal((300, 4))
    first = rvq_train(data, stages=2, codebook_size=8, seed=9)
    second = rvq_train(data, stages=2, codebook_size=8, seed=9)
    for a, b in zip(first.stages, second.stages):
        np.testing.assert_array_equal(a, b)


def test_training_needs_k_frames():
    with pytest.raises(QuantizationError):
        rvq_train(np.zeros((10, 4)), stages=1, codebook_size=16)


def test_codebooks_validation():
    with pytest.raises(QuantizationError):
        RvqCodebooks(())
    with pytest.raises(QuantizationError):
        RvqCodebooks((np.zeros((4, 2)), np.zeros((4, 3))))


def test_quantizer_interface(trained):
    quantizer = RvqQuantizer(trained)
    assert quantizer.num_codebooks == 4
    assert quantizer.codebook_sizes == (16, 16, 16, 16)
    assert quantizer.dim == 8


def test_codebook_usage():
    usage = codebook_usage(np.array([[0, 3], [0, 3], [1, 3], [1, 3]]), (4, 4))
    assert usage[0] == {"used": 2, "size": 4, "perplexity": pytest.approx(2.0)}
    assert usage[1]["used"] == 1
    assert usage[1]["perplexity"] == pytest.approx(1.0)
