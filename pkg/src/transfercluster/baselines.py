"""Reference clusterers used for comparison benchmarks and as small-instance
oracles: Lloyd k-means, mini-batch k-means, DBSCAN and agglomerative
clustering with single or complete linkage.

All of them are deterministic: k-means takes explicit initial centroids (a
seeded helper picks k distinct sample rows), the mini-batch variant derives
both its initialization and its batches from one seeded PCG64 generator, and
ties everywhere break toward the lowest index. DBSCAN and the agglomerative
method deliberately materialize the full O(n^2) distance matrix; their
memory growth is part of what the scaling benchmark demonstrates.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import kernels
from .vectors import as_matrix

NOISE = -1


@dataclass(frozen=True)
class LabelAssignment:
    """Per-sample cluster indices; ``NOISE`` (-1) marks density-based noise.

    ``k`` is the number of (non-noise) clusters the assignment refers to;
    all non-noise labels lie in [0, k).
    """

    labels: np.ndarray
    k: int

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", lab)
        real = lab[lab != NOISE]
        if real.size and (real.min() < 0 or real.max() >= self.k):
            raise ValueError(f"labels outside [0, {self.k})")


def seeded_sample_init(data, k: int, seed: int) -> np.ndarray:
    """k distinct sample rows chosen by numpy's PCG64 generator for ``seed``
    (``default_rng(seed).choice(n, k, replace=False)``)."""
    x = as_matrix(data)
    if not 1 <= k <= x.shape[0]:
        raise ValueError(f"k={k} out of range 1..{x.shape[0]}")
    idx = np.random.default_rng(seed).choice(x.shape[0], size=k, replace=False)
    return x[idx].copy()


def kmeans_fit(data, k: int, initial_centroids, max_iter: int = 100):
    """Lloyd iteration from the given centroids until assignments stabilize
    or ``max_iter`` passes.

    An empty cluster is repaired by reseeding it with the sample farthest
    from its assigned centroid (lowest index on ties). Returns
    (centroids, LabelAssignment, iterations).
    """
    x = as_matrix(data)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range 1..{n}")
    cents = as_matrix(initial_centroids)
    if cents.shape != (k, x.shape[1]):
        raise ValueError(f"initial centroids must be ({k}, {x.shape[1]}), got {cents.shape}")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    cents = cents.copy()
    prev = None
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        idx, dist = kernels.assign_nearest(x, cents)
        counts = np.bincount(idx, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            far = int(np.argmax(dist))
            counts[idx[far]] -= 1
            idx[far] = empty
            dist[far] = 0.0
            counts[empty] = 1
        if prev is not None and np.array_equal(idx, prev):
            break
        sums = np.zeros_like(cents)
        np.add.at(sums, idx, x)
        cents = sums / counts[:, None]
        prev = idx
    return cents, LabelAssignment(labels=idx, k=k), iterations


def minibatch_kmeans_fit(data, k: int, batch_size: int, seed: int,
                         max_iter: int = 100, initial_centroids=None):
    """Mini-batch k-means with per-centroid counts and 1/count learning rate.

    Each iteration draws a batch without replacement from ``default_rng(seed)``
    (the same stream that picks the initial centroids when none are given),
    caches the nearest-centroid assignment of the batch, then applies the
    sequential running-mean update. Final labels are by nearest centroid.
    Identical seeds give bit-identical output.
    """
    x = as_matrix(data)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} out of range 1..{n}")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    rng = np.random.default_rng(seed)
    if initial_centroids is None:
        cents = x[rng.choice(n, size=k, replace=False)].copy()
    else:
        cents = as_matrix(initial_centroids).copy()
        if cents.shape != (k, x.shape[1]):
            raise ValueError(f"initial centroids must be ({k}, {x.shape[1]}), got {cents.shape}")
    counts = np.zeros(k, dtype=np.int64)
    size = min(batch_size, n)
    for _ in range(max_iter):
        batch = rng.choice(n, size=size, replace=False)
        assigned, _ = kernels.assign_nearest(x[batch], cents)
        for row, c in zip(batch, assigned):
            counts[c] += 1
            eta = 1.0 / counts[c]
            cents[c] += eta * (x[row] - cents[c])
    labels, _ = kernels.assign_nearest(x, cents)
    return cents, LabelAssignment(labels=labels, k=k)


def dbscan_fit(data, eps: float, min_samples: int) -> LabelAssignment:
    """Density clustering with closed-ball neighborhoods (distance <= eps,
    the point itself included). Clusters are numbered by first-visited
    sample order; unreachable points are NOISE."""
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    if min_samples < 1:
        raise ValueError(f"min_samples must be >= 1, got {min_samples}")
    x = as_matrix(data)
    n = x.shape[0]
    dist = kernels.pairwise_distances(x, x)
    neighborhoods = [np.flatnonzero(dist[i] <= eps) for i in range(n)]
    core = np.array([len(nb) >= min_samples for nb in neighborhoods])
    labels = np.full(n, -2, dtype=np.int64)  # -2 = unvisited
    cluster = 0
    for i in range(n):
        if labels[i] != -2 or not core[i]:
            continue
        labels[i] = cluster
        queue = deque(neighborhoods[i])
        while queue:
            j = int(queue.popleft())
            if labels[j] == NOISE:
                labels[j] = cluster  # noise reachable from a core: border
            if labels[j] != -2:
                continue
            labels[j] = cluster
            if core[j]:
                queue.extend(neighborhoods[j])
        cluster += 1
    labels[labels == -2] = NOISE
    return LabelAssignment(labels=labels, k=cluster)


def agglomerative_fit(data, linkage: str = "single",
                      n_clusters: int | None = None,
                      distance_threshold: float | None = None):
    """Bottom-up merging of the closest cluster pair (single = min pairwise
    distance, complete = max) until the cluster count target is reached or
    the closest pair is farther than the distance threshold.

    Exactly one stop criterion must be given. Pair ties break on the lowest
    (i, j); a merged cluster keeps the smaller index, so final labels are
    ordered by each cluster's smallest member. Maintains the full distance
    matrix (the deliberate O(n^2) memory cost). Returns
    (LabelAssignment, merges) where merges lists (i, j, distance).
    """
    if linkage not in ("single", "complete"):
        raise ValueError(f"linkage must be 'single' or 'complete', got {linkage!r}")
    if (n_clusters is None) == (distance_threshold is None):
        raise ValueError("give exactly one of n_clusters or distance_threshold")
    x = as_matrix(data)
    n = x.shape[0]
    if n == 0:
        raise ValueError("agglomerative_fit requires non-empty data")
    if n_clusters is not None and not 1 <= n_clusters <= n:
        raise ValueError(f"n_clusters={n_clusters} out of range 1..{n}")
    if distance_threshold is not None and distance_threshold < 0:
        raise ValueError("distance_threshold must be >= 0")
    dist = kernels.pairwise_distances(x, x)
    np.fill_diagonal(dist, np.inf)
    active = np.ones(n, dtype=bool)
    merges: list[tuple[int, int, float]] = []
    remaining = n
    target = n_clusters if n_clusters is not None else 1
    while remaining > target:
        flat = int(np.argmin(dist))  # row-major: ties pick the lowest (i, j)
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        d = float(dist[i, j])
        if distance_threshold is not None and d > distance_threshold:
            break
        merges.append((i, j, d))
        combine = np.minimum if linkage == "single" else np.maximum
        row = combine(dist[i], dist[j])
        row[i] = np.inf
        dist[i] = row
        dist[:, i] = row
        dist[j, :] = np.inf
        dist[:, j] = np.inf
        active[j] = False
        remaining -= 1
    reps = np.flatnonzero(active)
    rep_of = np.arange(n)
    for i, j, _ in merges:  # chronological, so chained merges resolve transitively
        rep_of[rep_of == j] = i
    labels = np.searchsorted(reps, rep_of)
    return LabelAssignment(labels=labels, k=len(reps)), merges
