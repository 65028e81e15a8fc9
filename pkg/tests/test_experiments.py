import json

import numpy as np
import pytest

from transfercluster import BirchParams, SyntheticSpec, gen_synthetic
from transfercluster.experiments import (
    ExperimentReport,
    bench_kernels,
    bench_scaling,
    exp_dimensionality,
    exp_reproducibility,
    exp_sequence,
    exp_volume,
)
from transfercluster.reports import emit_report, report_to_csv, report_to_json

SMALL = SyntheticSpec(ppv_count=3, samples_per_ppv=10, dim=5,
                      separation=20.0, spread=0.05, seed=0)
PARAMS = BirchParams(threshold=0.6, branching_factor=50)


class TestSequence:
    def test_single_equals_sequential(self):
        ds = gen_synthetic(SMALL)
        report = exp_sequence(ds, permutation_count=4, seed=1, params=PARAMS)
        assert len(report.rows) == 5  # 4 permutations + mixed
        assert report.rows[-1]["sequence_no"] == "mixed"
        for row in report.rows:
            assert row["si_single"] == row["si_sequential"]  # exact
        assert report.summary["all_trees_identical"] is True
        assert report.summary["max_abs_si_delta"] == 0.0

    def test_columns(self):
        ds = gen_synthetic(SMALL)
        report = exp_sequence(ds, permutation_count=1, seed=0, params=PARAMS)
        assert report.columns == ("sequence_no", "si_single", "si_sequential", "n_clusters")

    def test_single_ppv_trivial(self):
        ds = gen_synthetic(SyntheticSpec(ppv_count=1, samples_per_ppv=8, dim=3, seed=2))
        report = exp_sequence(ds, permutation_count=1, seed=0, params=PARAMS)
        assert report.summary["all_trees_identical"] is True
        # one cluster: silhouette undefined, recorded rather than dropped
        assert np.isnan(report.rows[0]["si_single"])
        assert report.rows[0]["note"]

    def test_requires_ppv(self):
        from transfercluster.synth import Dataset
        ds = Dataset(vectors=np.zeros((4, 2)), ppv=None)
        with pytest.raises(ValueError, match="PPV"):
            exp_sequence(ds, 1, 0, PARAMS)


class TestReproducibility:
    def test_one_distinct_outcome(self):
        ds = gen_synthetic(SMALL)
        report = exp_reproducibility(ds, repeats=5, seed=3, params=PARAMS)
        assert report.summary["distinct_outcomes"] == {"1": 1, "2": 1}
        assert report.summary["all_trees_bit_identical"] is True
        assert len(report.rows) == 10

    def test_repeats_validated(self):
        ds = gen_synthetic(SMALL)
        with pytest.raises(ValueError):
            exp_reproducibility(ds, repeats=1)


class TestDimensionality:
    def test_grid_and_native_rows(self):
        report = exp_dimensionality(SMALL, base_dims=(8, 12), pca_targets=(2, 8, 12),
                                    params=PARAMS)
        pairs = {(r["source_dim"], r["target_dim"], r["pca"]) for r in report.rows}
        assert (8, 8, 0) in pairs and (12, 12, 0) in pairs        # native rows
        assert (8, 2, 1) in pairs and (8, 8, 1) in pairs          # targets <= source
        assert (8, 12, 1) not in pairs                            # inapplicable skipped
        assert (12, 12, 1) in pairs
        assert len(report.rows) == 2 + 2 + 3

    def test_full_rank_pca_matches_native(self):
        report = exp_dimensionality(SMALL, base_dims=(10,), pca_targets=(10,), params=PARAMS)
        native = next(r for r in report.rows if not r["pca"])
        full = next(r for r in report.rows if r["pca"])
        assert native["n_clusters"] == full["n_clusters"]
        assert full["si"] == pytest.approx(native["si"], abs=1e-9)

    def test_cluster_count_stable_at_healthy_targets(self):
        report = exp_dimensionality(SMALL, base_dims=(12, 20), pca_targets=(6, 12),
                                    params=PARAMS)
        for row in report.rows:
            if row["pca"] and row["target_dim"] >= 6:
                assert row["n_clusters"] == SMALL.ppv_count

    def test_impossible_target_rejected(self):
        with pytest.raises(ValueError, match="exceeds"):
            exp_dimensionality(SMALL, base_dims=(5,), pca_targets=(10,), params=PARAMS)


class TestVolume:
    def test_grid_complete(self):
        report = exp_volume(SMALL, samples_per_ppv_list=(5, 10), thresholds=(0.0, 0.6))
        assert len(report.rows) == 4
        cells = {(r["samples_per_ppv"], r["threshold"]) for r in report.rows}
        assert cells == {(5, 0.0), (5, 0.6), (10, 0.0), (10, 0.6)}

    def test_threshold_zero_gives_n_clusters(self):
        report = exp_volume(SMALL, samples_per_ppv_list=(5,), thresholds=(0.0,))
        row = report.rows[0]
        assert row["n_clusters"] == 5 * SMALL.ppv_count
        assert row["si"] == 0.0  # all singletons

    def test_summary_std(self):
        report = exp_volume(SMALL, samples_per_ppv_list=(5, 10, 15), thresholds=(0.6,))
        std = report.summary["si_std_by_threshold"]["0.6"]
        assert 0.0 <= std < 0.05
        assert report.summary["max_si_std"] == std

    def test_negative_threshold_rejected(self):
        with pytest.raises(ValueError):
            exp_volume(SMALL, samples_per_ppv_list=(5,), thresholds=(-0.1,))


class TestBenchScaling:
    def test_rows_and_exponents(self):
        report = bench_scaling(algorithms=("birch", "agglomerative"), sizes=(30, 60, 120),
                               spec=SMALL, params=PARAMS)
        assert len(report.rows) == 6
        expo = report.summary["exponents"]
        assert 1.8 <= expo["agglomerative"]["memory"] <= 2.2
        assert expo["birch"]["memory"] < 1.0

    def test_single_cell(self):
        report = bench_scaling(algorithms=("kmeans",), sizes=(30,), spec=SMALL, params=PARAMS)
        assert len(report.rows) == 1
        assert report.rows[0]["algorithm"] == "kmeans"

    def test_unknown_algorithm(self):
        with pytest.raises(ValueError):
            bench_scaling(algorithms=("birch", "spectral"), sizes=(30,), spec=SMALL)

    def test_unsorted_sizes(self):
        with pytest.raises(ValueError):
            bench_scaling(algorithms=("birch",), sizes=(60, 30), spec=SMALL)


class TestBenchKernels:
    def test_covers_backends_and_kernels(self):
        from transfercluster import kernels
        report = bench_kernels(sizes=(64,), dim=8, repeats=1, seed=0)
        backends = {r["backend"] for r in report.rows}
        assert backends == set(kernels.available_backends())
        names = {r["kernel"] for r in report.rows}
        assert names == {"pairwise_distances", "assign_nearest", "silhouette_parts"}


class TestEmit:
    def test_csv_shape_and_floats(self, tmp_path):
        report = ExperimentReport(
            name="demo", params={}, columns=("a", "b"),
            rows=[{"a": 1, "b": 0.1}, {"a": 2, "b": float("nan")}],
        )
        out = tmp_path / "demo.csv"
        emit_report(report, "csv", out)
        text = out.read_text()
        assert text == "a,b\n1,0.1\n2,nan\n"

    def test_empty_report_header_only(self, tmp_path):
        report = ExperimentReport(name="demo", params={}, columns=("x", "y"))
        out = tmp_path / "empty.csv"
        emit_report(report, "csv", out)
        assert out.read_text() == "x,y\n"

    def test_json_round_trips(self, tmp_path):
        ds = gen_synthetic(SMALL)
        report = exp_sequence(ds, permutation_count=2, seed=0, params=PARAMS)
        out = tmp_path / "seq.json"
        emit_report(report, "json", out)
        payload = json.loads(out.read_text())
        assert payload["name"] == "sequence"
        assert len(payload["rows"]) == 3
        assert payload["summary"]["all_trees_identical"] is True

    def test_plot_companion_file(self, tmp_path):
        report = exp_volume(SMALL, samples_per_ppv_list=(5,), thresholds=(0.0, 0.6))
        out = tmp_path / "vol.csv"
        emit_report(report, "csv", out)
        plot = (tmp_path / "vol.plot.csv").read_text()
        assert plot.splitlines()[0] == "threshold,samples_per_ppv,si"
        assert len(plot.splitlines()) == 3

    def test_bad_format(self):
        report = ExperimentReport(name="demo", params={}, columns=("a",))
        with pytest.raises(ValueError):
            emit_report(report, "xml", None)

    def test_rerun_byte_identical(self):
        ds = gen_synthetic(SMALL)
        a = report_to_csv(exp_sequence(ds, 3, seed=5, params=PARAMS))
        b = report_to_csv(exp_sequence(gen_synthetic(SMALL), 3, seed=5, params=PARAMS))
        assert a == b
        va = report_to_csv(exp_volume(SMALL, (5, 10), (0.0, 0.5)))
        vb = report_to_csv(exp_volume(SMALL, (5, 10), (0.0, 0.5)))
        assert va == vb

    def test_json_text_parses_with_strict_parser(self):
        report = ExperimentReport(
            name="demo", params={}, columns=("a",),
            rows=[{"a": float("nan")}], summary={"v": float("inf")},
        )
        payload = json.loads(report_to_json(report), parse_constant=lambda _: pytest.fail("non-strict JSON"))
        assert payload["rows"][0]["a"] is None
        assert payload["summary"]["v"] is None
