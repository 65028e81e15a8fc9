"""Command-line interface.

Subcommands: gen, fit, predict, silhouette, db (insert/query/retain/save/
load/merge), demand-check, similarity-check, exp-sequence, exp-repro,
exp-dim, exp-volume, bench, bench-kernels. Exit codes: 0 success, 1 usage
error, 2 data/validation error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import kernels
from .cftree import BirchParams, CfTree, birch_fit
from .experiments import (
    ALGORITHMS,
    DEFAULT_BENCH_SIZES,
    DEFAULT_PCA_TARGETS,
    DEFAULT_SOURCE_DIMS,
    DEFAULT_THRESHOLDS,
    DEFAULT_VOLUMES,
    ExperimentReport,
    bench_kernels,
    bench_scaling,
    exp_dimensionality,
    exp_reproducibility,
    exp_sequence,
    exp_volume,
)
from .repdb import RepresentationDb
from .reports import emit_report
from .synth import Dataset, SyntheticSpec, gen_synthetic, load_dataset, save_dataset
from .transfer import DemandCheckConfig, demand_check, select_transfer_cases, similarity_check
from .validation import silhouette


class _Parser(argparse.ArgumentParser):
    """argparse, but usage problems exit with code 1 (2 is for data errors)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(1)


def _csv_ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _csv_floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _add_output(p: _Parser) -> None:
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def _add_birch(p: _Parser) -> None:
    p.add_argument("--threshold", type=float, default=0.6)
    p.add_argument("--branching", type=int, default=50)


def _add_spec(p: _Parser) -> None:
    p.add_argument("--ppv-count", type=int, default=10)
    p.add_argument("--samples-per-ppv", type=int, default=100)
    p.add_argument("--dim", type=int, default=50)
    p.add_argument("--separation", type=float, default=20.0)
    p.add_argument("--spread", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)


def _spec_from(args) -> SyntheticSpec:
    return SyntheticSpec(
        ppv_count=args.ppv_count,
        samples_per_ppv=args.samples_per_ppv,
        dim=args.dim,
        separation=args.separation,
        spread=args.spread,
        seed=args.seed,
    )


def _birch_from(args) -> BirchParams:
    return BirchParams(threshold=args.threshold, branching_factor=args.branching)


def build_parser() -> _Parser:
    parser = _Parser(prog="transfercluster",
                     description="Streaming clustering and transfer case selection")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a synthetic PPV dataset CSV")
    _add_spec(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("fit", help="fit the CF tree on a dataset CSV")
    p.add_argument("--in", dest="inp", required=True)
    _add_birch(p)
    p.add_argument("--model-out", default=None, help="write the fitted tree as JSON")
    p.add_argument("--labels-out", default=None, help="write per-sample labels as CSV")
    _add_output(p)

    p = sub.add_parser("predict", help="assign query vectors to a fitted tree")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="inp", required=True)
    _add_output(p)

    p = sub.add_parser("silhouette", help="silhouette report for a labeled dataset CSV")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--labels-col", default="ppv")
    _add_output(p)

    pdb = sub.add_parser("db", help="representation database operations")
    dbsub = pdb.add_subparsers(dest="db_command", required=True, parser_class=_Parser)

    p = dbsub.add_parser("insert", help="append one entry")
    p.add_argument("--db", required=True)
    p.add_argument("--vector", required=True, help="comma-separated floats")
    p.add_argument("--task-id", required=True)
    p.add_argument("--sensor-type", required=True)
    p.add_argument("--measured-at", type=int, required=True)
    p.add_argument("--label", default=None)

    p = dbsub.add_parser("query", help="filter entries")
    p.add_argument("--db", required=True)
    p.add_argument("--task-id", default=None)
    p.add_argument("--sensor-type", default=None)
    p.add_argument("--label", default=None)
    p.add_argument("--from", dest="time_from", type=int, default=None)
    p.add_argument("--to", dest="time_to", type=int, default=None)
    _add_output(p)

    p = dbsub.add_parser("retain", help="keep only per-subcluster exemplars")
    p.add_argument("--db", required=True)
    p.add_argument("--cap", type=int, required=True)
    _add_birch(p)
    p.add_argument("--out", default=None, help="write result here instead of in place")
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = dbsub.add_parser("save", help="validate and rewrite a database file")
    p.add_argument("--db", required=True)
    p.add_argument("--out", required=True)

    p = dbsub.add_parser("load", help="validate a database file and summarize it")
    p.add_argument("--db", required=True)
    _add_output(p)

    p = dbsub.add_parser("merge", help="append an imported database under fresh ids")
    p.add_argument("--db", required=True)
    p.add_argument("--import-db", dest="import_db", required=True)
    p.add_argument("--out", default=None, help="write result here instead of in place")

    p = sub.add_parser("demand-check", help="transfer demand check on a metric stream")
    p.add_argument("--history", default=None, help="comma-separated metric values")
    p.add_argument("--in", dest="inp", default=None, help="file with one value per line")
    p.add_argument("--baseline-window", type=int, required=True)
    p.add_argument("--recent-window", type=int, required=True)
    p.add_argument("--degradation-ratio", type=float, required=True)
    _add_output(p)

    p = sub.add_parser("similarity-check", help="rank stored tasks against query vectors")
    p.add_argument("--db", required=True)
    p.add_argument("--in", dest="inp", required=True, help="query dataset CSV")
    _add_birch(p)
    p.add_argument("--similarity-threshold", type=float, default=0.6)
    p.add_argument("--min-matched-fraction", type=float, default=0.5)
    p.add_argument("--top-k", type=int, default=None, help="also print the selected task ids")
    _add_output(p)

    p = sub.add_parser("exp-sequence", help="single vs sequential training protocol")
    _add_spec(p)
    _add_birch(p)
    p.add_argument("--permutations", type=int, default=10)
    _add_output(p)

    p = sub.add_parser("exp-repro", help="repeatability protocol")
    _add_spec(p)
    _add_birch(p)
    p.add_argument("--repeats", type=int, default=10)
    _add_output(p)

    p = sub.add_parser("exp-dim", help="dimensionality protocol")
    _add_spec(p)
    _add_birch(p)
    p.add_argument("--source-dims", type=_csv_ints, default=DEFAULT_SOURCE_DIMS)
    p.add_argument("--targets", type=_csv_ints, default=DEFAULT_PCA_TARGETS)
    _add_output(p)

    p = sub.add_parser("exp-volume", help="data volume protocol")
    _add_spec(p)
    p.add_argument("--branching", type=int, default=50)
    p.add_argument("--volumes", type=_csv_ints, default=DEFAULT_VOLUMES)
    p.add_argument("--thresholds", type=_csv_floats, default=DEFAULT_THRESHOLDS)
    _add_output(p)

    p = sub.add_parser("bench", help="scaling benchmark over the clusterers")
    _add_spec(p)
    _add_birch(p)
    p.add_argument("--algorithms", type=lambda s: tuple(s.split(",")), default=ALGORITHMS)
    p.add_argument("--sizes", type=_csv_ints, default=DEFAULT_BENCH_SIZES)
    _add_output(p)

    p = sub.add_parser("bench-kernels", help="compare compiled vs numpy kernels")
    p.add_argument("--sizes", type=_csv_ints, default=(256, 512, 1024))
    p.add_argument("--dim", type=int, default=50)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    _add_output(p)

    return parser


def _labels_from(dataset: Dataset, column: str) -> np.ndarray:
    if column != "ppv":
        raise ValueError(f"unknown labels column {column!r} (dataset files label via 'ppv')")
    if dataset.ppv is None:
        raise ValueError("dataset has no 'ppv' column to use as labels")
    return dataset.ppv


def _run_fit(args) -> None:
    ds = load_dataset(args.inp)
    params = _birch_from(args)
    tree, model = birch_fit(params, ds.vectors)
    try:
        si = silhouette(ds.vectors, model.labels).mean_si
        note = ""
    except ValueError as exc:
        si, note = float("nan"), str(exc)
    if args.model_out:
        with open(args.model_out, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(tree.to_dict(), fh)
            fh.write("\n")
    if args.labels_out:
        save_dataset(Dataset(vectors=ds.vectors, ppv=model.labels), args.labels_out)
    report = ExperimentReport(
        name="fit",
        params={"threshold": params.threshold, "branching_factor": params.branching_factor},
        columns=("n", "dim", "n_clusters", "si"),
        rows=[{"n": ds.n, "dim": ds.dim, "n_clusters": model.k, "si": si, "note": note}],
    )
    emit_report(report, args.format, args.out)


def _run_predict(args) -> None:
    with open(args.model, "r", encoding="utf-8") as fh:
        tree = CfTree.from_dict(json.load(fh))
    ds = load_dataset(args.inp)
    idx, dist = tree.predict_many(ds.vectors)
    report = ExperimentReport(
        name="predict",
        params={"model": args.model},
        columns=("sample", "subcluster", "distance"),
        rows=[{"sample": i, "subcluster": int(c), "distance": float(d)}
              for i, (c, d) in enumerate(zip(idx, dist))],
    )
    emit_report(report, args.format, args.out)


def _run_silhouette(args) -> None:
    ds = load_dataset(args.inp)
    labels = _labels_from(ds, args.labels_col)
    rep = silhouette(ds.vectors, labels)
    report = ExperimentReport(
        name="silhouette",
        params={"labels_col": args.labels_col},
        columns=("cluster", "mean_s", "size"),
        rows=[{"cluster": c, "mean_s": float(m),
               "size": int(np.sum(labels[labels >= 0] == u))}
              for c, (m, u) in enumerate(zip(rep.per_cluster_mean, np.unique(labels[labels >= 0])))],
        summary={"mean_si": rep.mean_si, "excluded_noise_count": rep.excluded_noise_count},
    )
    emit_report(report, args.format, args.out)
    if args.format == "csv" and args.out is not None:
        sys.stdout.write(f"mean_si={rep.mean_si!r} excluded_noise={rep.excluded_noise_count}\n")


def _db_report(db: RepresentationDb, rows) -> ExperimentReport:
    return ExperimentReport(
        name="db",
        params={},
        columns=("id", "task_id", "sensor_type", "measured_at", "label", "vector"),
        rows=rows,
    )


def _run_db(args) -> None:
    cmd = args.db_command
    if cmd == "insert":
        try:
            db = RepresentationDb.load(args.db)
        except FileNotFoundError:
            db = RepresentationDb()
        new_id = db.insert(_csv_floats(args.vector), args.task_id, args.sensor_type,
                           args.measured_at, args.label)
        db.save(args.db)
        sys.stdout.write(f"{new_id}\n")
    elif cmd == "query":
        db = RepresentationDb.load(args.db)
        time_range = None
        if (args.time_from is None) != (args.time_to is None):
            raise ValueError("--from and --to must be given together")
        if args.time_from is not None:
            time_range = (args.time_from, args.time_to)
        hits = db.query(task_id=args.task_id, sensor_type=args.sensor_type,
                        label=args.label, time_range=time_range)
        rows = [{"id": r.id, "task_id": r.task_id, "sensor_type": r.sensor_type,
                 "measured_at": r.measured_at, "label": r.label,
                 "vector": ";".join(repr(float(v)) for v in r.vector)} for r in hits]
        emit_report(_db_report(db, rows), args.format, args.out)
    elif cmd == "retain":
        db = RepresentationDb.load(args.db)
        tree = CfTree(_birch_from(args))
        tree.insert_many(db.vectors())
        result = db.retain_exemplars(tree, args.cap)
        db.save(args.out or args.db)
        report = ExperimentReport(
            name="retention",
            params={"cap": args.cap, "threshold": args.threshold, "branching_factor": args.branching},
            columns=("subcluster", "kept", "dropped"),
            rows=[{"subcluster": c, "kept": k, "dropped": d} for c, k, d in result.per_subcluster],
            summary={"kept": result.kept, "dropped": result.dropped},
        )
        emit_report(report, args.format, None)
    elif cmd == "save":
        RepresentationDb.load(args.db).save(args.out)
    elif cmd == "load":
        db = RepresentationDb.load(args.db)
        report = ExperimentReport(
            name="db-summary",
            params={},
            columns=("entries", "dim", "tasks"),
            rows=[{"entries": len(db), "dim": db.dim or 0, "tasks": len(db.task_ids())}],
        )
        emit_report(report, args.format, args.out)
    elif cmd == "merge":
        db = RepresentationDb.load(args.db)
        db.merge_import(RepresentationDb.load(args.import_db))
        db.save(args.out or args.db)
        sys.stdout.write(f"{len(db)}\n")


def _run_demand_check(args) -> None:
    if (args.history is None) == (args.inp is None):
        raise ValueError("give exactly one of --history or --in")
    if args.history is not None:
        values = _csv_floats(args.history)
    else:
        with open(args.inp, "r", encoding="utf-8") as fh:
            values = tuple(float(line) for line in fh if line.strip())
    config = DemandCheckConfig(args.baseline_window, args.recent_window, args.degradation_ratio)
    result = demand_check(values, config)
    report = ExperimentReport(
        name="demand-check",
        params={"baseline_window": args.baseline_window, "recent_window": args.recent_window,
                "degradation_ratio": args.degradation_ratio},
        columns=("triggered", "baseline", "recent"),
        rows=[{"triggered": int(result.triggered), "baseline": result.baseline,
               "recent": result.recent}],
    )
    emit_report(report, args.format, args.out)


def _run_similarity_check(args) -> None:
    db = RepresentationDb.load(args.db)
    if len(db) == 0:
        raise ValueError("representation database is empty")
    tree = CfTree(_birch_from(args))
    tree.insert_many(db.vectors())
    query = load_dataset(args.inp)
    decision = similarity_check(db, tree, query.vectors,
                                similarity_threshold=args.similarity_threshold,
                                min_matched_fraction=args.min_matched_fraction)
    report = ExperimentReport(
        name="similarity-check",
        params={"similarity_threshold": args.similarity_threshold,
                "min_matched_fraction": args.min_matched_fraction},
        columns=("rank", "task_id", "mean_similarity", "matched_fraction"),
        rows=[{"rank": i + 1, "task_id": c.task_id, "mean_similarity": c.mean_similarity,
               "matched_fraction": c.matched_fraction}
              for i, c in enumerate(decision.candidates)],
        summary={
            "outcome": decision.outcome.value,
            "per_vector": [{"query_index": m.query_index, "subcluster": m.subcluster,
                            "distance": m.distance, "task_id": m.task_id,
                            "matched": m.matched} for m in decision.per_vector],
        },
    )
    emit_report(report, args.format, args.out)
    if args.format == "csv" and args.out is not None:
        sys.stdout.write(f"outcome={decision.outcome.value}\n")
    if args.top_k is not None:
        for task in select_transfer_cases(decision, args.top_k):
            sys.stdout.write(f"{task}\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            save_dataset(gen_synthetic(_spec_from(args)), args.out)
        elif args.command == "fit":
            _run_fit(args)
        elif args.command == "predict":
            _run_predict(args)
        elif args.command == "silhouette":
            _run_silhouette(args)
        elif args.command == "db":
            _run_db(args)
        elif args.command == "demand-check":
            _run_demand_check(args)
        elif args.command == "similarity-check":
            _run_similarity_check(args)
        elif args.command == "exp-sequence":
            report = exp_sequence(gen_synthetic(_spec_from(args)),
                                  permutation_count=args.permutations,
                                  seed=args.seed, params=_birch_from(args))
            emit_report(report, args.format, args.out)
        elif args.command == "exp-repro":
            report = exp_reproducibility(gen_synthetic(_spec_from(args)),
                                         repeats=args.repeats, seed=args.seed,
                                         params=_birch_from(args))
            emit_report(report, args.format, args.out)
        elif args.command == "exp-dim":
            report = exp_dimensionality(_spec_from(args), base_dims=args.source_dims,
                                        pca_targets=args.targets, params=_birch_from(args))
            emit_report(report, args.format, args.out)
        elif args.command == "exp-volume":
            report = exp_volume(_spec_from(args), samples_per_ppv_list=args.volumes,
                                thresholds=args.thresholds, branching_factor=args.branching)
            emit_report(report, args.format, args.out)
        elif args.command == "bench":
            report = bench_scaling(algorithms=args.algorithms, sizes=args.sizes,
                                   spec=_spec_from(args), params=_birch_from(args))
            emit_report(report, args.format, args.out)
        elif args.command == "bench-kernels":
            report = bench_kernels(sizes=args.sizes, dim=args.dim,
                                   repeats=args.repeats, seed=args.seed)
            emit_report(report, args.format, args.out)
            if args.out is not None:
                sys.stdout.write(f"active backend: {kernels.active_backend()}\n")
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
