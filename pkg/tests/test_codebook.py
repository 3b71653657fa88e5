import numpy as np
import pytest

from earlydetect.codebook import (
    Codebook, IntegralHistogram, OnlineIntegralHistogram, fit_codebook, interval_histogram, quantize,
)
from earlydetect.errors import CodebookError
from earlydetect.timeline import FeatureStream, Interval

N_IDENTITY_CASES = 1000


def brute_histogram(words, iv, W):
    counts = np.zeros(W, dtype=np.int64)
    for t in range(iv.t1, iv.t2 + 1):
        counts[words[t]] += 1
    return counts


def test_codebook_two_clusters():
    rng = np.random.default_rng(0)
    a = rng.uniform(0.0, 1.0, size=(6, 2))
    b = rng.uniform(10.0, 11.0, size=(6, 2))
    cb = fit_codebook(np.vstack([a, b]), W=2, seed=0)
    for center in cb.centers:
        in_a = np.all(center >= a.min(axis=0)) and np.all(center <= a.max(axis=0))
        in_b = np.all(center >= b.min(axis=0)) and np.all(center <= b.max(axis=0))
        assert in_a or in_b
    assert {int(w) for w in quantize(a, cb)} != {int(w) for w in quantize(b, cb)}


def test_codebook_w_equals_distinct_points():
    points = np.array([[0.0, 0.0], [5.0, 1.0], [2.0, 7.0], [9.0, 9.0]])
    frames = np.vstack([points, points[:2]])
    cb = fit_codebook(frames, W=4, seed=1)
    got = cb.centers[np.lexsort(cb.centers.T[::-1])]
    want = points[np.lexsort(points.T[::-1])]
    np.testing.assert_allclose(got, want, atol=1e-9)


def test_codebook_deterministic_and_order_invariant():
    rng = np.random.default_rng(2)
    frames = rng.normal(size=(200, 3))
    first = fit_codebook(frames, W=8, seed=5)
    second = fit_codebook(frames, W=8, seed=5)
    shuffled = fit_codebook(frames[rng.permutation(len(frames))], W=8, seed=5)
    np.testing.assert_array_equal(first.centers, second.centers)
    np.testing.assert_array_equal(first.centers, shuffled.centers)


def test_codebook_too_few_distinct_frames():
    frames = np.vstack([np.zeros((10, 2)), np.ones((10, 2))])
    with pytest.raises(CodebookError, match="short by 2"):
        fit_codebook(frames, W=4)


def test_quantize_nearest_and_ties():
    cb = Codebook(centers=np.array([[10.0, 10.0], [1.0, 0.0], [20.0, 20.0], [30.0, 30.0], [-1.0, 0.0]]))
    assert quantize(np.array([[30.0, 30.0]]), cb).tolist() == [3]
    assert quantize(np.array([[0.0, 0.0]]), cb).tolist() == [1]
    stream = FeatureStream("s", np.random.default_rng(0).normal(size=(17, 2)))
    assert len(quantize(stream, cb)) == 17


def test_quantize_dimension_mismatch():
    cb = Codebook(centers=np.zeros((2, 3)) + np.arange(2)[:, None])
    with pytest.raises(ValueError, match="dimension"):
        quantize(np.zeros((4, 2)), cb)


def test_interval_histogram_known_values():
    words = np.array([0, 2, 2, 1, 0])
    ih = IntegralHistogram.from_words(words, 3)
    np.testing.assert_array_equal(interval_histogram(ih, Interval(3, 3)), [0.0, 1.0, 0.0])
    np.testing.assert_array_equal(interval_histogram(ih, Interval(0, 4), normalize=False), [2, 1, 2])
    with pytest.raises(ValueError):
        interval_histogram(ih, Interval(2, 5))


def test_integral_histogram_identity():
    rng = np.random.default_rng(3)
    for _ in range(N_IDENTITY_CASES):
        W = int(rng.integers(2, 9))
        words = rng.integers(0, W, size=int(rng.integers(1, 300)))
        ih = IntegralHistogram.from_words(words, W)
        t1 = int(rng.integers(0, len(words)))
        t2 = int(rng.integers(t1, len(words)))
        iv = Interval(t1, t2)
        counts = interval_histogram(ih, iv, normalize=False)
        np.testing.assert_array_equal(counts, brute_histogram(words, iv, W))
        assert counts.sum() == iv.duration
        np.testing.assert_allclose(interval_histogram(ih, iv).sum(), 1.0)


def test_integral_histogram_structure():
    rng = np.random.default_rng(4)
    for _ in range(200):
        W = int(rng.integers(2, 9))
        words = rng.integers(0, W, size=int(rng.integers(2, 100)))
        cum = IntegralHistogram.from_words(words, W).cumulative
        assert not cum[0].any()
        steps = np.diff(cum, axis=0)
        assert (steps >= 0).all() and (steps.sum(axis=1) == 1).all()

        ih = IntegralHistogram(cum)
        a = int(rng.integers(0, len(words) - 1))
        c = int(rng.integers(a + 1, len(words)))
        b = int(rng.integers(a, c))
        left = interval_histogram(ih, Interval(a, b), normalize=False)
        right = interval_histogram(ih, Interval(b + 1, c), normalize=False)
        np.testing.assert_array_equal(left + right, interval_histogram(ih, Interval(a, c), normalize=False))


def test_online_integral_histogram_matches_batch():
    rng = np.random.default_rng(5)
    for _ in range(20):
        W = int(rng.integers(2, 9))
        words = rng.integers(0, W, size=int(rng.integers(1, 200)))
        online = OnlineIntegralHistogram(W, capacity=4)
        for w in words:
            online.push(int(w))
        batch = IntegralHistogram.from_words(words, W).cumulative
        assert online.length == len(words)
        np.testing.assert_array_equal(online.cumulative[: len(words) + 1], batch)


def test_codebook_dict_round_trip():
    cb = Codebook(centers=np.random.default_rng(6).normal(size=(4, 3)))
    np.testing.assert_array_equal(Codebook.from_dict(cb.to_dict()).centers, cb.centers)
