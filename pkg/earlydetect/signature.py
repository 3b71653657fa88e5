"""Cascade histograms of onset-signature gradients and the vector x(t).

For a window of b frames ending at t, the window is split recursively at its
floor midpoint down to depth l. Every node counts the frames whose gradient
G(t') - G(t' - s) is positive (h+) or not (h-), for each step size s.
Nodes are emitted depth-first, left subtree, right subtree, then the node
itself. Samples before frame 0 read as G = 0.

Layout of x(t) for K onset classes::

    [k=0: [s_0: node_0 (h+, h-), node_1, ...], [s_1: ...]], [k=1: ...], ...
    mean_0 ... mean_{K-1}, max_0 ... max_{K-1}

Bins are divided by their node length, means are window sums divided by b.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.ndimage import maximum_filter1d

from .onsets import OnsetSignatureSet
from .timeline import Interval


@dataclass(frozen=True)
class CascadeConfig:
    window: int = 100  # b
    depth: int = 3  # l
    scales: tuple[int, ...] = (1, 5, 10)  # s_set

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError(f"cascade depth must be >= 1, got {self.depth}")
        if self.window < 2 ** (self.depth - 1):
            raise ValueError(
                f"window {self.window} too short for depth {self.depth} "
                f"(needs >= {2 ** (self.depth - 1)})"
            )
        if not self.scales or min(self.scales) < 1:
            raise ValueError(f"scales must be nonempty and >= 1, got {self.scales}")

    @property
    def n_nodes(self) -> int:
        return 2 ** self.depth - 1

    def histogram_length(self, n_onsets: int) -> int:
        return n_onsets * len(self.scales) * self.n_nodes * 2

    def vector_length(self, n_onsets: int) -> int:
        return self.histogram_length(n_onsets) + 2 * n_onsets


@lru_cache(maxsize=32)
def cascade_nodes(window: int, depth: int) -> tuple[np.ndarray, np.ndarray]:
    """(lo, hi) offsets inside the window for every node, in emission order."""
    nodes: list[tuple[int, int]] = []

    def visit(lo: int, hi: int, level: int) -> None:
        if level < depth:
            mid = (lo + hi) // 2
            visit(lo, mid, level + 1)
            visit(mid + 1, hi, level + 1)
        nodes.append((lo, hi))

    visit(0, window - 1, 1)
    lo, hi = zip(*nodes)
    return np.asarray(lo, dtype=np.int64), np.asarray(hi, dtype=np.int64)


def _padded_window(values: np.ndarray, lo: int, t: int) -> np.ndarray:
    """values[:, lo:t+1] with zeros standing in for negative indices."""
    if lo >= 0:
        return values[:, lo:t + 1]
    pad = np.zeros((values.shape[0], -lo), dtype=values.dtype)
    return np.concatenate([pad, values[:, : t + 1]], axis=1)


def _positive_gradients(values: np.ndarray, t: int, cfg: CascadeConfig, s: int) -> np.ndarray:
    """Cumulative positive-gradient counts over the window, shape (K, b + 1)."""
    start = t - cfg.window + 1
    ext = _padded_window(values, start - s, t)
    positive = (ext[:, s:] - ext[:, :-s]) > 0
    cum = np.zeros((values.shape[0], cfg.window + 1), dtype=np.int64)
    np.cumsum(positive, axis=1, out=cum[:, 1:])
    return cum


def _cascade_counts(values: np.ndarray, t: int, cfg: CascadeConfig) -> np.ndarray:
    """Unnormalized (h+, h-) bins for every series; shape (K, |s| * nodes * 2)."""
    lo, hi = cascade_nodes(cfg.window, cfg.depth)
    lengths = hi - lo + 1
    blocks = []
    for s in cfg.scales:
        cum = _positive_gradients(values, t, cfg, s)
        plus = cum[:, hi + 1] - cum[:, lo]
        blocks.append(np.stack([plus, lengths - plus], axis=2).reshape(values.shape[0], -1))
    return np.concatenate(blocks, axis=1)


def gradient_counts(G: np.ndarray, iv: Interval, s: int) -> tuple[int, int]:
    """Counts of frames in iv with positive and non-positive gradient at step s."""
    G = np.asarray(G, dtype=np.float64)
    if s < 1:
        raise ValueError(f"gradient step must be >= 1, got {s}")
    if iv.t2 >= len(G):
        raise ValueError(f"interval {iv} outside series of length {len(G)}")
    ext = _padded_window(G[None, :], iv.t1 - s, iv.t2)[0]
    plus = int(np.count_nonzero(ext[s:] - ext[:-s] > 0))
    return plus, iv.duration - plus


def cascade_histogram(G: np.ndarray, t: int, cfg: CascadeConfig) -> np.ndarray:
    """Unnormalized cascade histogram of one series at frame t."""
    if t < 0:
        raise ValueError(f"frame must be >= 0, got {t}")
    G = np.asarray(G, dtype=np.float64)
    return _cascade_counts(G[None, :], t, cfg)[0]


def _node_lengths(cfg: CascadeConfig) -> np.ndarray:
    lo, hi = cascade_nodes(cfg.window, cfg.depth)
    return np.tile(np.repeat(hi - lo + 1, 2), len(cfg.scales)).astype(np.float64)


def _window_sums(values: np.ndarray, t: int, cfg: CascadeConfig) -> np.ndarray:
    return np.sum(values[:, max(0, t - cfg.window + 1): t + 1], axis=1)


def signature_values(values: np.ndarray, t: int, cfg: CascadeConfig) -> np.ndarray:
    """x(t) from a (K, T) array of onset responses."""
    K = values.shape[0]
    hist = _cascade_counts(values, t, cfg) / _node_lengths(cfg)
    means = _window_sums(values, t, cfg) / cfg.window
    window = values[:, max(0, t - cfg.window + 1): t + 1]
    maxes = np.max(window, axis=1) if window.shape[1] else np.zeros(K)
    return np.concatenate([hist.reshape(-1), means, maxes])


def signature_matrix(values: np.ndarray, cfg: CascadeConfig) -> np.ndarray:
    """x(t) for every t of a (K, T) response array at once, shape (T, vector_length(K)).

    Row t equals ``signature_values(values, t, cfg)`` exactly.
    """
    K, T = values.shape
    if T == 0 or K == 0:
        return np.zeros((T, cfg.vector_length(K)))
    ts = np.arange(T)
    lo, hi = cascade_nodes(cfg.window, cfg.depth)
    blocks = []
    for s in cfg.scales:
        pad = cfg.window + s
        ext = np.concatenate([np.zeros((K, pad)), values], axis=1)
        positive = np.zeros(ext.shape, dtype=np.int64)
        positive[:, s:] = (ext[:, s:] - ext[:, :-s]) > 0
        cum = np.zeros((K, ext.shape[1] + 1), dtype=np.int64)
        np.cumsum(positive, axis=1, out=cum[:, 1:])
        start = ts - cfg.window + 1 + pad  # window start in padded coordinates
        plus = cum[:, start[:, None] + hi[None, :] + 1] - cum[:, start[:, None] + lo[None, :]]
        blocks.append(np.stack([plus, (hi - lo + 1) - plus], axis=3).reshape(K, T, -1))
    counts = np.concatenate(blocks, axis=2).transpose(1, 0, 2)  # (T, K, |s| * nodes * 2)
    hist = (counts / _node_lengths(cfg)).reshape(T, -1)

    means = np.stack([_window_sums(values, t, cfg) for t in ts]) / cfg.window
    # window [t - b + 1, t]; "nearest" repeats frame 0, which leaves the max unchanged
    maxes = maximum_filter1d(
        values, size=cfg.window, axis=1, origin=(cfg.window - 1) // 2, mode="nearest",
    ).T
    return np.concatenate([hist, means, maxes], axis=1)


def signature_vector(sigs: OnsetSignatureSet, t: int, cfg: CascadeConfig) -> np.ndarray:
    """Onset-signature feature vector x(t)."""
    if not 0 <= t < sigs.length:
        raise ValueError(f"frame {t} outside stream of length {sigs.length}")
    return signature_values(sigs.values, t, cfg)
