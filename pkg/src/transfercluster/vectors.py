"""Dense feature vectors, Euclidean geometry and covariance PCA.

Feature vectors are 1-D float64 numpy arrays; datasets are (n, d) matrices.
All entries must be finite and the dimension is fixed per dataset. Every
operation here is a pure function over its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def as_vector(x) -> np.ndarray:
    """Validate and convert one feature vector to a float64 array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ValueError(f"feature vector must be 1-D and non-empty, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("feature vector contains NaN or Inf")
    return v


def as_matrix(data) -> np.ndarray:
    """Validate and convert a sequence of feature vectors to an (n, d) matrix."""
    try:
        x = np.asarray(data, dtype=np.float64)
    except ValueError as exc:
        raise ValueError(f"vectors of mixed dimension: {exc}") from None
    if x.ndim == 1:
        x = x[None, :] if x.size else x.reshape(0, 0)
    if x.ndim != 2:
        raise ValueError(f"expected a sequence of vectors, got shape {x.shape}")
    if x.size and not np.all(np.isfinite(x)):
        raise ValueError("data contains NaN or Inf")
    return np.ascontiguousarray(x)


def euclidean_distance(a, b) -> float:
    """L2 distance between two vectors of equal dimension."""
    av = as_vector(a)
    bv = as_vector(b)
    if av.shape[0] != bv.shape[0]:
        raise ValueError(f"dimension mismatch: {av.shape[0]} vs {bv.shape[0]}")
    diff = av - bv
    return float(np.sqrt(diff @ diff))


@dataclass(frozen=True)
class PcaModel:
    """Principal components of a dataset.

    ``components`` rows are orthonormal directions sorted by descending
    ``explained_variance``. The sign of each component is fixed so that its
    largest-magnitude entry (first such index on ties) is positive, making
    repeated fits bit-identical.
    """

    mean: np.ndarray                # (d,)
    components: np.ndarray          # (k, d)
    explained_variance: np.ndarray  # (k,) non-negative, non-increasing

    @property
    def d(self) -> int:
        return self.mean.shape[0]

    @property
    def k(self) -> int:
        return self.components.shape[0]


def pca_fit(data, k: int) -> PcaModel:
    """Fit PCA via symmetric eigendecomposition of the sample covariance.

    Requires ``1 <= k <= min(d, n)``. Uses the n-1 (sample) normalization;
    a single-sample dataset has zero covariance.
    """
    x = as_matrix(data)
    if x.size == 0:
        raise ValueError("pca_fit requires non-empty data")
    n, d = x.shape
    if not 1 <= k <= min(d, n):
        raise ValueError(f"k={k} out of range 1..min(d={d}, n={n})")
    mean = x.mean(axis=0)
    centered = x - mean
    if n > 1:
        cov = (centered.T @ centered) / (n - 1)
    else:
        cov = np.zeros((d, d))
    evals, evecs = np.linalg.eigh(cov)  # ascending eigenvalues
    evals = np.maximum(evals, 0.0)      # clamp round-off negatives
    components = np.ascontiguousarray(evecs[:, ::-1].T[:k])
    variance = np.ascontiguousarray(evals[::-1][:k])
    for row in components:
        pivot = int(np.argmax(np.abs(row)))
        if row[pivot] < 0:
            np.negative(row, out=row)
    return PcaModel(mean=mean, components=components, explained_variance=variance)


def pca_transform(model: PcaModel, data) -> np.ndarray:
    """Project data onto the model's components; output is (n, k)."""
    x = as_matrix(data)
    if x.shape[1] != model.d:
        raise ValueError(f"dimension mismatch: data has d={x.shape[1]}, model d={model.d}")
    return np.ascontiguousarray((x - model.mean) @ model.components.T)
