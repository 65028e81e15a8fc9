"""Cluster validity via the silhouette index.

For sample j in cluster i, ``a`` is its mean distance to the other members
of i and ``b`` the smallest mean distance to any other cluster; the sample's
silhouette is ``(b - a) / max(a, b)`` in [-1, 1], with the Rousseeuw
convention s = 0 for members of singleton clusters. The index is the
arithmetic mean over all (non-noise) samples. Density-based noise marks
(label < 0) are excluded and counted, not scored.

``silhouette_oracle`` is a deliberately literal, loop-based transcription of
the definition kept independent of the optimized kernels so the two can be
cross-checked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .vectors import as_matrix


@dataclass(frozen=True)
class SilhouetteReport:
    per_sample: np.ndarray        # s per non-noise sample, original relative order
    mean_si: float                # arithmetic mean of per_sample
    per_cluster_mean: np.ndarray  # (k,) mean s per cluster
    excluded_noise_count: int


def _extract_labels(labels) -> np.ndarray:
    arr = getattr(labels, "labels", labels)
    return np.asarray(arr, dtype=np.int64)


def silhouette(data, labels) -> SilhouetteReport:
    """Silhouette report for a labeled dataset.

    ``labels`` is an int array (negative = noise) or anything with a
    ``labels`` attribute. Requires at least two distinct non-noise clusters.
    """
    x = as_matrix(data)
    lab = _extract_labels(labels)
    if x.shape[0] == 0:
        raise ValueError("silhouette requires non-empty data")
    if lab.shape[0] != x.shape[0]:
        raise ValueError(f"{lab.shape[0]} labels for {x.shape[0]} samples")
    keep = lab >= 0
    noise = int(np.sum(~keep))
    x = np.ascontiguousarray(x[keep])
    lab = lab[keep]
    present, compact = np.unique(lab, return_inverse=True)
    k = present.shape[0]
    if k < 2:
        raise ValueError("silhouette undefined: fewer than 2 clusters after noise exclusion")
    counts = np.bincount(compact, minlength=k).astype(np.int64)
    a, b = kernels.silhouette_parts(x, compact.astype(np.int64), counts)
    denom = np.maximum(a, b)
    s = np.zeros_like(a)
    np.divide(b - a, denom, out=s, where=denom > 0)
    s[counts[compact] == 1] = 0.0
    per_cluster = np.array([s[compact == c].mean() for c in range(k)])
    return SilhouetteReport(
        per_sample=s,
        mean_si=float(s.mean()),
        per_cluster_mean=per_cluster,
        excluded_noise_count=noise,
    )


def silhouette_oracle(data, labels) -> float:
    """Mean silhouette by direct evaluation of the definition (slow path)."""
    x = as_matrix(data)
    lab = _extract_labels(labels)
    if x.shape[0] == 0:
        raise ValueError("silhouette requires non-empty data")
    points = [tuple(float(v) for v in row) for row in x]
    members: dict[int, list[int]] = {}
    for i, l in enumerate(lab):
        if l >= 0:
            members.setdefault(int(l), []).append(i)
    if len(members) < 2:
        raise ValueError("silhouette undefined: fewer than 2 clusters after noise exclusion")

    def dist(p, q):
        return sum((pi - qi) ** 2 for pi, qi in zip(p, q)) ** 0.5

    total = 0.0
    count = 0
    for cluster, own in members.items():
        for j in own:
            count += 1
            if len(own) == 1:
                continue  # singleton convention: s = 0
            a = sum(dist(points[j], points[o]) for o in own if o != j) / (len(own) - 1)
            b = min(
                sum(dist(points[j], points[o]) for o in other) / len(other)
                for c, other in members.items()
                if c != cluster
            )
            if max(a, b) > 0:
                total += (b - a) / max(a, b)
    return total / count
