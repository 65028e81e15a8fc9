"""Synthetic datasets of production-process-variant (PPV) groups, plus the
dataset CSV format used by the CLI.

Each PPV gets a centroid on a regular simplex scaled so pairwise centroid
distances equal ``separation`` (when the dimension allows; otherwise a
seeded random placement scaled to that minimum distance). Samples are the
centroid plus isotropic Gaussian noise with per-coordinate deviation
``spread / sqrt(dim)``, which makes the expected within-PPV radius equal to
``spread`` regardless of dimension - the property that keeps threshold
semantics comparable across dimensionalities.

Dataset files are CSV with float columns ``f0..f{d-1}`` and an optional
trailing integer ``ppv`` column; '.' decimals, comma delimiter, LF endings,
UTF-8, floats in round-trip-exact form.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .vectors import as_matrix


@dataclass(frozen=True)
class SyntheticSpec:
    ppv_count: int = 10
    samples_per_ppv: int = 100
    dim: int = 50
    separation: float = 20.0
    spread: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.ppv_count < 1 or self.samples_per_ppv < 1 or self.dim < 1:
            raise ValueError("ppv_count, samples_per_ppv and dim must be >= 1")
        if self.separation < 0 or self.spread < 0:
            raise ValueError("separation and spread must be >= 0")


@dataclass(frozen=True)
class Dataset:
    vectors: np.ndarray       # (n, d)
    ppv: np.ndarray | None    # (n,) int64 group ids, or None if unlabeled

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def ppv_centroids(spec: SyntheticSpec, rng: np.random.Generator) -> np.ndarray:
    c, d = spec.ppv_count, spec.dim
    if d >= c:
        # scaled standard-basis simplex: exact pairwise distance = separation
        cents = np.zeros((c, d))
        idx = np.arange(c)
        cents[idx, idx] = spec.separation / np.sqrt(2.0)
        return cents - cents.mean(axis=0)
    # dimension too low for a simplex: random placement, min distance = separation
    cents = rng.standard_normal((c, d))
    diffs = cents[:, None, :] - cents[None, :, :]
    dist = np.sqrt((diffs ** 2).sum(axis=2))
    np.fill_diagonal(dist, np.inf)
    nearest = dist.min()
    if nearest > 0 and spec.separation > 0:
        cents *= spec.separation / nearest
    elif spec.separation == 0:
        cents[:] = 0.0
    return cents


def gen_synthetic(spec: SyntheticSpec) -> Dataset:
    """Deterministic PPV-major dataset for the given spec."""
    rng = np.random.default_rng(spec.seed)
    cents = ppv_centroids(spec, rng)
    sigma = spec.spread / np.sqrt(spec.dim)
    noise = rng.normal(0.0, sigma, size=(spec.ppv_count, spec.samples_per_ppv, spec.dim))
    vectors = (cents[:, None, :] + noise).reshape(-1, spec.dim)
    ppv = np.repeat(np.arange(spec.ppv_count, dtype=np.int64), spec.samples_per_ppv)
    return Dataset(vectors=np.ascontiguousarray(vectors), ppv=ppv)


def shuffled(dataset: Dataset, rng: np.random.Generator) -> Dataset:
    """Same samples in a random order."""
    order = rng.permutation(dataset.n)
    return Dataset(
        vectors=np.ascontiguousarray(dataset.vectors[order]),
        ppv=None if dataset.ppv is None else dataset.ppv[order],
    )


def save_dataset(dataset: Dataset, destination) -> None:
    d = dataset.dim
    header = [f"f{i}" for i in range(d)]
    if dataset.ppv is not None:
        header.append("ppv")
    with open(destination, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for i in range(dataset.n):
            row = [repr(float(v)) for v in dataset.vectors[i]]
            if dataset.ppv is not None:
                row.append(str(int(dataset.ppv[i])))
            writer.writerow(row)


def load_dataset(source) -> Dataset:
    """Read a dataset CSV; malformed rows raise ValueError with the line number."""
    with open(source, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{source}: empty file") from None
        has_ppv = bool(header) and header[-1] == "ppv"
        feat = header[:-1] if has_ppv else header
        if feat != [f"f{i}" for i in range(len(feat))] or not feat:
            raise ValueError(f"{source}: line 1: expected header f0..f{{d-1}}[,ppv]")
        d = len(feat)
        vectors: list[list[float]] = []
        ppv: list[int] = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ValueError(f"{source}: line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                vectors.append([float(v) for v in row[:d]])
                if has_ppv:
                    ppv.append(int(row[d]))
            except ValueError:
                raise ValueError(f"{source}: line {lineno}: malformed numeric value") from None
    if not vectors:
        raise ValueError(f"{source}: no data rows")
    x = as_matrix(vectors)
    return Dataset(vectors=x, ppv=np.asarray(ppv, dtype=np.int64) if has_ppv else None)
