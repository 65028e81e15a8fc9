"""Numpy fallback for the distance kernels.

Same contracts as the compiled ``_ckernels`` module: exact per-pair
differences (no ``x^2 + y^2 - 2xy`` expansion, which loses precision for
near-coincident points), first-index tie breaking, float64 throughout.
Row blocks bound the size of the broadcast temporaries.
"""

from __future__ import annotations

import numpy as np

# target element count for (block, m, d) difference temporaries (~32 MB)
_BLOCK_ELEMS = 4_000_000


def pairwise_distances(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Euclidean distance matrix of shape (len(x), len(y))."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, d = x.shape
    m = y.shape[0]
    out = np.empty((n, m), dtype=np.float64)
    block = max(1, _BLOCK_ELEMS // max(m * d, 1))
    for s in range(0, n, block):
        diff = x[s : s + block, None, :] - y[None, :, :]
        np.sqrt(np.einsum("ijk,ijk->ij", diff, diff), out=out[s : s + block])
    return out


def assign_nearest(x: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of the nearest centroid per row of ``x`` (ties: lowest index)."""
    dist = pairwise_distances(x, centroids)
    idx = np.argmin(dist, axis=1)
    return idx.astype(np.int64), dist[np.arange(len(idx)), idx]


def silhouette_parts(x: np.ndarray, labels: np.ndarray, counts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample mean intra-cluster distance ``a`` and nearest-other-cluster
    mean distance ``b``.

    ``labels`` must be contiguous in [0, len(counts)) with every count >= 1
    and at least two clusters. Samples in singleton clusters get ``a = 0``.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    counts = np.asarray(counts, dtype=np.int64)
    n = labels.shape[0]
    k = counts.shape[0]
    order = np.argsort(labels, kind="stable")
    starts = np.zeros(k, dtype=np.intp)
    starts[1:] = np.cumsum(counts)[:-1]
    a = np.empty(n, dtype=np.float64)
    b = np.empty(n, dtype=np.float64)
    block = max(1, _BLOCK_ELEMS // max(n, 1))
    for s in range(0, n, block):
        dist = pairwise_distances(x[s : s + block], x)
        sums = np.add.reduceat(dist[:, order], starts, axis=1)
        lab = labels[s : s + block]
        rows = np.arange(lab.shape[0])
        cnt = counts[lab]
        a[s : s + block] = np.where(cnt > 1, sums[rows, lab] / np.maximum(cnt - 1, 1), 0.0)
        means = sums / counts[None, :]
        means[rows, lab] = np.inf
        b[s : s + block] = means.min(axis=1)
    return a, b
