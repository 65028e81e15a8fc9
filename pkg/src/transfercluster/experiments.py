"""Experiment protocols on synthetic PPV data plus the scaling and kernel
benchmarks, all emitting tabular reports.

The four protocol runners are deterministic given (spec, seed): rerunning
one produces byte-identical CSV. Failed grid cells are recorded with an
error note, never dropped.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import kernels
from .baselines import agglomerative_fit, dbscan_fit, kmeans_fit, minibatch_kmeans_fit, seeded_sample_init
from .cftree import BirchParams, CfTree, birch_fit
from .synth import Dataset, SyntheticSpec, gen_synthetic, shuffled
from .validation import silhouette
from .vectors import pca_fit, pca_transform

ALGORITHMS = ("birch", "kmeans", "minibatch_kmeans", "dbscan", "agglomerative")

DEFAULT_VOLUMES = (100, 200, 300, 400)
DEFAULT_THRESHOLDS = tuple(round(i / 10, 1) for i in range(11))
DEFAULT_SOURCE_DIMS = (50, 100, 150)
DEFAULT_PCA_TARGETS = (2, 10, 25, 50, 100)
DEFAULT_BENCH_SIZES = (200, 400, 800, 1600)


@dataclass
class ExperimentReport:
    name: str
    params: dict
    columns: tuple[str, ...]
    rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    plot_columns: tuple[str, ...] | None = None


def _mean_si(data, labels) -> tuple[float, str]:
    try:
        return silhouette(data, labels).mean_si, ""
    except ValueError as exc:
        return float("nan"), str(exc)


def _ppv_groups(dataset: Dataset) -> list[np.ndarray]:
    if dataset.ppv is None:
        raise ValueError("dataset has no PPV grouping")
    ids = np.unique(dataset.ppv)
    return [np.flatnonzero(dataset.ppv == i) for i in ids]


def _sequence_orders(group_count: int, count: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [rng.permutation(group_count) for _ in range(count)]


def exp_sequence(dataset: Dataset, permutation_count: int = 10, seed: int = 0,
                 params: BirchParams = BirchParams()) -> ExperimentReport:
    """Single-shot vs chunk-wise training over PPV-order permutations.

    For each seeded permutation the PPV blocks are concatenated and fitted
    once in one call and once chunk by chunk; both runs must agree exactly
    (tree bits, silhouette, cluster count). A final row fits the fully
    shuffled sample mix, chunked into ppv-count pieces for the sequential
    run.
    """
    groups = _ppv_groups(dataset)
    report = ExperimentReport(
        name="sequence",
        params={"permutation_count": permutation_count, "seed": seed,
                "threshold": params.threshold, "branching_factor": params.branching_factor},
        columns=("sequence_no", "si_single", "si_sequential", "n_clusters"),
    )
    rng = np.random.default_rng(seed)
    all_identical = True
    max_delta = 0.0
    for s in range(1, permutation_count + 1):
        order = rng.permutation(len(groups))
        chunks = [dataset.vectors[groups[g]] for g in order]
        row, identical, delta = _single_vs_sequential(str(s), chunks, params)
        report.rows.append(row)
        all_identical &= identical
        max_delta = max(max_delta, delta)
    mix = dataset.vectors[rng.permutation(dataset.n)]
    chunks = np.array_split(mix, len(groups))
    row, identical, delta = _single_vs_sequential("mixed", chunks, params)
    report.rows.append(row)
    all_identical &= identical
    max_delta = max(max_delta, delta)
    report.summary = {"all_trees_identical": all_identical, "max_abs_si_delta": max_delta}
    return report


def _single_vs_sequential(tag: str, chunks: list[np.ndarray], params: BirchParams):
    data = np.concatenate(chunks)
    tree_single, model = birch_fit(params, data)
    tree_seq = CfTree(params)
    for chunk in chunks:
        tree_seq.insert_many(chunk)
    labels_seq, _ = tree_seq.predict_many(data)
    si_single, note_a = _mean_si(data, model.labels)
    si_seq, note_b = _mean_si(data, labels_seq)
    identical = tree_single.fingerprint() == tree_seq.fingerprint()
    k_seq = tree_seq.centroids().shape[0]
    delta = abs(si_single - si_seq) if np.isfinite(si_single) and np.isfinite(si_seq) else 0.0
    row = {
        "sequence_no": tag,
        "si_single": si_single,
        "si_sequential": si_seq,
        "n_clusters": model.k,
        "note": "; ".join(filter(None, [note_a, note_b, "" if identical else "trees differ",
                                        "" if k_seq == model.k else f"sequential k={k_seq}"])),
    }
    si_equal = bool(si_single == si_seq) or (np.isnan(si_single) and np.isnan(si_seq))
    return row, bool(identical and k_seq == model.k and si_equal), float(delta)


def exp_reproducibility(dataset: Dataset, repeats: int = 10, seed: int = 0,
                        params: BirchParams = BirchParams(),
                        sequence_count: int = 2) -> ExperimentReport:
    """Repeat the fit of fixed PPV sequences and count distinct outcomes.

    The sequences are the first ``sequence_count`` permutations of the same
    seeded stream the sequence experiment uses. Every repeat must give the
    same (si, cluster count) - the summary reports the number of distinct
    outcomes per sequence and whether all trees were bit-identical.
    """
    if repeats < 2:
        raise ValueError("repeats must be >= 2")
    groups = _ppv_groups(dataset)
    orders = _sequence_orders(len(groups), sequence_count, seed)
    report = ExperimentReport(
        name="reproducibility",
        params={"repeats": repeats, "seed": seed, "sequence_count": sequence_count,
                "threshold": params.threshold, "branching_factor": params.branching_factor},
        columns=("sequence_no", "repeat", "si", "n_clusters"),
    )
    distinct: dict[str, int] = {}
    bit_identical = True
    for s, order in enumerate(orders, start=1):
        data = np.concatenate([dataset.vectors[groups[g]] for g in order])
        outcomes = set()
        fingerprints = set()
        for r in range(1, repeats + 1):
            tree, model = birch_fit(params, data)
            si, note = _mean_si(data, model.labels)
            outcomes.add((si, model.k))
            fingerprints.add(tree.fingerprint())
            report.rows.append({"sequence_no": str(s), "repeat": r, "si": si,
                                "n_clusters": model.k, "note": note})
        distinct[str(s)] = len(outcomes)
        bit_identical &= len(fingerprints) == 1
    report.summary = {"distinct_outcomes": distinct, "all_trees_bit_identical": bit_identical}
    return report


def exp_dimensionality(spec: SyntheticSpec,
                       base_dims: tuple[int, ...] = DEFAULT_SOURCE_DIMS,
                       pca_targets: tuple[int, ...] = DEFAULT_PCA_TARGETS,
                       params: BirchParams = BirchParams()) -> ExperimentReport:
    """Cluster matched-structure datasets at several native dimensions and
    after PCA projection to each applicable target dimension.

    Produces one no-PCA row per source dimension plus one row per
    (source, target <= source) pair. Noise scales with 1/sqrt(dim), so the
    within-group radius (the quantity the threshold gates) is comparable
    across all rows.
    """
    if not base_dims or not pca_targets:
        raise ValueError("base_dims and pca_targets must be non-empty")
    if min(pca_targets) < 1:
        raise ValueError("pca targets must be >= 1")
    if min(pca_targets) > max(base_dims):
        raise ValueError(f"pca target {min(pca_targets)} exceeds every source dimension")
    report = ExperimentReport(
        name="dimensionality",
        params={"spec": asdict(spec), "base_dims": list(base_dims),
                "pca_targets": list(pca_targets),
                "threshold": params.threshold, "branching_factor": params.branching_factor},
        columns=("source_dim", "target_dim", "pca", "si", "n_clusters"),
        plot_columns=("source_dim", "target_dim", "si"),
    )
    counts: dict[str, dict[str, int]] = {}
    for sd in base_dims:
        ds = gen_synthetic(replace(spec, dim=sd))
        mixed = shuffled(ds, np.random.default_rng([spec.seed, sd]))
        _, model = birch_fit(params, mixed.vectors)
        si, note = _mean_si(mixed.vectors, model.labels)
        report.rows.append({"source_dim": sd, "target_dim": sd, "pca": 0,
                            "si": si, "n_clusters": model.k, "note": note})
        counts.setdefault(str(sd), {})["native"] = model.k
        for target in pca_targets:
            if target > sd:
                continue
            projected = pca_transform(pca_fit(mixed.vectors, target), mixed.vectors)
            _, model = birch_fit(params, projected)
            si, note = _mean_si(projected, model.labels)
            report.rows.append({"source_dim": sd, "target_dim": target, "pca": 1,
                                "si": si, "n_clusters": model.k, "note": note})
            counts[str(sd)][str(target)] = model.k
    report.summary = {"planted_ppv_count": spec.ppv_count, "cluster_counts": counts}
    return report


def exp_volume(spec: SyntheticSpec,
               samples_per_ppv_list: tuple[int, ...] = DEFAULT_VOLUMES,
               thresholds: tuple[float, ...] = DEFAULT_THRESHOLDS,
               branching_factor: int = 50) -> ExperimentReport:
    """Silhouette grid over (samples per PPV) x (distance threshold).

    The summary reports the per-threshold standard deviation of the
    silhouette across volumes - the volume-stability evidence.
    """
    if not samples_per_ppv_list or not thresholds:
        raise ValueError("samples_per_ppv_list and thresholds must be non-empty")
    if min(thresholds) < 0:
        raise ValueError("thresholds must be >= 0")
    report = ExperimentReport(
        name="volume",
        params={"spec": asdict(spec), "samples_per_ppv": list(samples_per_ppv_list),
                "thresholds": list(thresholds), "branching_factor": branching_factor},
        columns=("samples_per_ppv", "threshold", "si", "n_clusters"),
        plot_columns=("threshold", "samples_per_ppv", "si"),
    )
    grid: dict[float, list[float]] = {t: [] for t in thresholds}
    for volume in samples_per_ppv_list:
        ds = gen_synthetic(replace(spec, samples_per_ppv=volume))
        mixed = shuffled(ds, np.random.default_rng([spec.seed, volume]))
        for threshold in thresholds:
            try:
                _, model = birch_fit(BirchParams(threshold, branching_factor), mixed.vectors)
                si, note = _mean_si(mixed.vectors, model.labels)
                k = model.k
            except ValueError as exc:
                si, note, k = float("nan"), str(exc), 0
            report.rows.append({"samples_per_ppv": volume, "threshold": threshold,
                                "si": si, "n_clusters": k, "note": note})
            grid[threshold].append(si)
    std_by_threshold = {
        str(t): float(np.std(np.asarray(v))) if np.all(np.isfinite(v)) else float("nan")
        for t, v in grid.items()
    }
    finite = [v for v in std_by_threshold.values() if np.isfinite(v)]
    report.summary = {
        "si_std_by_threshold": std_by_threshold,
        "max_si_std": max(finite) if finite else float("nan"),
    }
    return report


def _fit_exponent(sizes, values) -> float:
    x = np.log(np.asarray(sizes, dtype=np.float64))
    y = np.log(np.maximum(np.asarray(values, dtype=np.float64), 1e-9))
    if len(x) < 2:
        return float("nan")
    return float(np.polyfit(x, y, 1)[0])


def bench_scaling(algorithms: tuple[str, ...] = ALGORITHMS,
                  sizes: tuple[int, ...] = DEFAULT_BENCH_SIZES,
                  spec: SyntheticSpec = SyntheticSpec(),
                  params: BirchParams = BirchParams(),
                  dbscan_eps: float = 1.0, dbscan_min_samples: int = 5,
                  agglomerative_threshold: float = 1.0) -> ExperimentReport:
    """Wall-clock time and model-size proxy per algorithm over growing n.

    Proxies: tree node + subcluster count for the CF tree, centroid bytes
    for the k-means family, full-neighborhood bytes (n^2 * 8) for DBSCAN
    and condensed distance-matrix bytes (n(n-1)/2 * 8) for the
    agglomerative method. The summary fits log-log growth exponents.
    """
    unknown = set(algorithms) - set(ALGORITHMS)
    if unknown:
        raise ValueError(f"unknown algorithms: {sorted(unknown)}")
    if list(sizes) != sorted(set(sizes)):
        raise ValueError("sizes must be strictly ascending")
    report = ExperimentReport(
        name="bench",
        params={"spec": asdict(spec), "sizes": list(sizes), "algorithms": list(algorithms),
                "threshold": params.threshold, "branching_factor": params.branching_factor},
        columns=("algorithm", "n", "wall_time_s", "memory_proxy"),
    )
    datasets = {}
    for n in sizes:
        ds = gen_synthetic(replace(spec, samples_per_ppv=max(1, n // spec.ppv_count)))
        datasets[n] = shuffled(ds, np.random.default_rng([spec.seed, n])).vectors
    per_algo: dict[str, tuple[list, list, list]] = {}
    for algo in algorithms:
        ns, times, proxies = [], [], []
        for n in sizes:
            x = datasets[n]
            actual = x.shape[0]
            start = time.perf_counter()
            if algo == "birch":
                tree, _ = birch_fit(params, x)
                stats = tree.stats()
                proxy = stats["nodes"] + stats["subclusters"]
            elif algo == "kmeans":
                init = seeded_sample_init(x, spec.ppv_count, spec.seed)
                cents, _, _ = kmeans_fit(x, spec.ppv_count, init)
                proxy = cents.size * 8
            elif algo == "minibatch_kmeans":
                cents, _ = minibatch_kmeans_fit(x, spec.ppv_count, batch_size=100, seed=spec.seed)
                proxy = cents.size * 8
            elif algo == "dbscan":
                dbscan_fit(x, eps=dbscan_eps, min_samples=dbscan_min_samples)
                proxy = actual * actual * 8
            else:
                agglomerative_fit(x, linkage="single", distance_threshold=agglomerative_threshold)
                proxy = actual * (actual - 1) // 2 * 8
            elapsed = time.perf_counter() - start
            report.rows.append({"algorithm": algo, "n": actual,
                                "wall_time_s": elapsed, "memory_proxy": proxy, "note": ""})
            ns.append(actual)
            times.append(elapsed)
            proxies.append(proxy)
        per_algo[algo] = (ns, times, proxies)
    report.summary = {
        "exponents": {
            algo: {"time": _fit_exponent(ns, times), "memory": _fit_exponent(ns, proxies)}
            for algo, (ns, times, proxies) in per_algo.items()
        }
    }
    return report


def bench_kernels(sizes: tuple[int, ...] = (256, 512, 1024), dim: int = 50,
                  repeats: int = 3, seed: int = 0) -> ExperimentReport:
    """Compare the available kernel backends on the three hot kernels.

    Times the pairwise-distance matrix, nearest-centroid assignment and the
    silhouette accumulation for each backend and size (best of ``repeats``).
    """
    rng = np.random.default_rng(seed)
    backends = kernels.available_backends()
    report = ExperimentReport(
        name="bench-kernels",
        params={"sizes": list(sizes), "dim": dim, "repeats": repeats,
                "backends": backends, "active": kernels.active_backend()},
        columns=("kernel", "backend", "n", "seconds"),
    )
    timings: dict[tuple[str, str], float] = {}
    for n in sizes:
        x = rng.standard_normal((n, dim))
        cents = rng.standard_normal((max(2, n // 20), dim))
        labels = rng.integers(0, 4, size=n).astype(np.int64)
        counts = np.bincount(labels, minlength=4).astype(np.int64)
        cases = {
            "pairwise_distances": lambda mod: mod.pairwise_distances(x, x),
            "assign_nearest": lambda mod: mod.assign_nearest(x, cents),
            "silhouette_parts": lambda mod: mod.silhouette_parts(x, labels, counts),
        }
        for name, fn in cases.items():
            for backend in backends:
                mod = kernels.get_backend(backend)
                best = min(_timed(fn, mod) for _ in range(repeats))
                report.rows.append({"kernel": name, "backend": backend, "n": n,
                                    "seconds": best, "note": ""})
                timings[(name, backend)] = best
    if "cython" in backends and "python" in backends:
        report.summary["speedup_at_largest_n"] = {
            name: timings[(name, "python")] / max(timings[(name, "cython")], 1e-12)
            for name in ("pairwise_distances", "assign_nearest", "silhouette_parts")
        }
    return report


def _timed(fn, mod) -> float:
    start = time.perf_counter()
    fn(mod)
    return time.perf_counter() - start
