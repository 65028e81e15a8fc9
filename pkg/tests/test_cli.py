import json

import numpy as np
import pytest

from transfercluster.cli import main


def run(argv):
    return main(argv)


@pytest.fixture
def dataset_csv(tmp_path):
    path = tmp_path / "data.csv"
    assert run(["gen", "--ppv-count", "3", "--samples-per-ppv", "6", "--dim", "4",
                "--seed", "5", "--out", str(path)]) == 0
    return path


class TestGenFitPredict:
    def test_gen_writes_header(self, dataset_csv):
        header = dataset_csv.read_text().splitlines()[0]
        assert header == "f0,f1,f2,f3,ppv"
        assert len(dataset_csv.read_text().splitlines()) == 19

    def test_fit_reports_clusters(self, dataset_csv, tmp_path, capsys):
        out = tmp_path / "fit.csv"
        assert run(["fit", "--in", str(dataset_csv), "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "n,dim,n_clusters,si"
        assert lines[1].startswith("18,4,3,")

    def test_fit_predict_round_trip(self, dataset_csv, tmp_path):
        model = tmp_path / "tree.json"
        assert run(["fit", "--in", str(dataset_csv), "--model-out", str(model),
                    "--out", str(tmp_path / "fit.csv")]) == 0
        out = tmp_path / "pred.csv"
        assert run(["predict", "--model", str(model), "--in", str(dataset_csv),
                    "--out", str(out)]) == 0
        rows = out.read_text().splitlines()
        assert rows[0] == "sample,subcluster,distance"
        assert len(rows) == 19

    def test_fit_labels_out(self, dataset_csv, tmp_path):
        labels = tmp_path / "labels.csv"
        assert run(["fit", "--in", str(dataset_csv), "--labels-out", str(labels),
                    "--out", str(tmp_path / "fit.csv")]) == 0
        assert labels.read_text().splitlines()[0] == "f0,f1,f2,f3,ppv"

    def test_silhouette_json(self, dataset_csv, tmp_path):
        out = tmp_path / "sil.json"
        assert run(["silhouette", "--in", str(dataset_csv), "--format", "json",
                    "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["summary"]["mean_si"] > 0.9

    def test_missing_file_is_data_error(self, tmp_path):
        assert run(["fit", "--in", str(tmp_path / "nope.csv")]) == 2

    def test_usage_error_exit_1(self):
        with pytest.raises(SystemExit) as exc:
            run(["fit"])  # --in missing
        assert exc.value.code == 1


class TestDbCommands:
    def insert(self, db, vec, task, ts):
        return run(["db", "insert", "--db", str(db), "--vector", vec,
                    "--task-id", task, "--sensor-type", "pressure",
                    "--measured-at", str(ts)])

    def test_insert_query_cycle(self, tmp_path, capsys):
        db = tmp_path / "db.jsonl"
        assert self.insert(db, "1.0,2.0", "A", 100) == 0
        assert self.insert(db, "1.1,2.1", "A", 110) == 0
        assert self.insert(db, "9.0,9.0", "B", 120) == 0
        capsys.readouterr()
        out = tmp_path / "q.csv"
        assert run(["db", "query", "--db", str(db), "--task-id", "A",
                    "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 3  # header + 2 hits

    def test_query_time_range(self, tmp_path):
        db = tmp_path / "db.jsonl"
        self.insert(db, "1.0", "A", 100)
        self.insert(db, "2.0", "A", 200)
        out = tmp_path / "q.csv"
        assert run(["db", "query", "--db", str(db), "--from", "150", "--to", "250",
                    "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 2

    def test_retain_cap_one(self, tmp_path, capsys):
        db = tmp_path / "db.jsonl"
        for i in range(6):
            self.insert(db, f"{0.01 * i},0.0", "A", 100 + i)
        for i in range(6):
            self.insert(db, f"{50 + 0.01 * i},0.0", "B", 200 + i)
        capsys.readouterr()
        assert run(["db", "retain", "--db", str(db), "--cap", "1"]) == 0
        kept = [json.loads(line) for line in db.read_text().splitlines()]
        assert len(kept) == 2

    def test_merge_and_load(self, tmp_path, capsys):
        a = tmp_path / "a.jsonl"
        b = tmp_path / "b.jsonl"
        self.insert(a, "1.0", "A", 1)
        self.insert(b, "2.0", "B", 2)
        capsys.readouterr()
        assert run(["db", "merge", "--db", str(a), "--import-db", str(b)]) == 0
        assert capsys.readouterr().out.strip() == "2"
        out = tmp_path / "summary.csv"
        assert run(["db", "load", "--db", str(a), "--out", str(out)]) == 0
        assert out.read_text().splitlines()[1] == "2,1,2"

    def test_save_normalizes(self, tmp_path):
        src = tmp_path / "src.jsonl"
        self.insert(src, "1.0", "A", 1)
        dst = tmp_path / "dst.jsonl"
        assert run(["db", "save", "--db", str(src), "--out", str(dst)]) == 0
        assert dst.read_text() == src.read_text()

    def test_corrupt_db_is_data_error(self, tmp_path):
        db = tmp_path / "bad.jsonl"
        db.write_text("{broken\n")
        assert run(["db", "query", "--db", str(db)]) == 2


class TestChecks:
    def test_demand_check_triggered(self, tmp_path):
        out = tmp_path / "d.json"
        assert run(["demand-check", "--history", "0.9,0.9,0.9,0.4,0.4",
                    "--baseline-window", "3", "--recent-window", "2",
                    "--degradation-ratio", "0.2", "--format", "json",
                    "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["rows"][0]["triggered"] == 1

    def test_demand_check_from_file(self, tmp_path):
        hist = tmp_path / "hist.txt"
        hist.write_text("0.9\n0.9\n0.9\n0.9\n0.9\n")
        out = tmp_path / "d.json"
        assert run(["demand-check", "--in", str(hist), "--baseline-window", "3",
                    "--recent-window", "2", "--degradation-ratio", "0.2",
                    "--format", "json", "--out", str(out)]) == 0
        assert json.loads(out.read_text())["rows"][0]["triggered"] == 0

    def test_demand_check_requires_exactly_one_source(self):
        assert run(["demand-check", "--baseline-window", "1", "--recent-window", "1",
                    "--degradation-ratio", "0.2"]) == 2

    def test_demand_check_short_history_is_data_error(self):
        assert run(["demand-check", "--history", "0.9,0.9", "--baseline-window", "3",
                    "--recent-window", "2", "--degradation-ratio", "0.2"]) == 2

    def test_similarity_check(self, tmp_path, capsys):
        db = tmp_path / "db.jsonl"
        rng = np.random.default_rng(0)
        lines = []
        for task, base in (("A", 0.0), ("B", 50.0)):
            for i in range(5):
                vec = [base + v for v in rng.normal(0, 0.01, 2)]
                lines.append(json.dumps({"id": len(lines), "vector": vec, "task_id": task,
                                         "sensor_type": "s", "measured_at": 1,
                                         "label": None}))
        db.write_text("\n".join(lines) + "\n")
        query = tmp_path / "q.csv"
        query.write_text("f0,f1\n0.0,0.0\n0.001,0.001\n")
        out = tmp_path / "sim.json"
        assert run(["similarity-check", "--db", str(db), "--in", str(query),
                    "--top-k", "1", "--format", "json", "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["summary"]["outcome"] == "transfer"
        assert payload["rows"][0]["task_id"] == "A"
        assert capsys.readouterr().out.strip() == "A"


class TestExperimentCommands:
    ARGS = ["--ppv-count", "3", "--samples-per-ppv", "5", "--dim", "4", "--seed", "1"]

    def test_exp_sequence(self, tmp_path):
        out = tmp_path / "seq.csv"
        assert run(["exp-sequence", *self.ARGS, "--permutations", "2",
                    "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "sequence_no,si_single,si_sequential,n_clusters"
        assert len(lines) == 4

    def test_exp_repro(self, tmp_path):
        out = tmp_path / "rep.json"
        assert run(["exp-repro", *self.ARGS, "--repeats", "3", "--format", "json",
                    "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["summary"]["distinct_outcomes"] == {"1": 1, "2": 1}

    def test_exp_dim(self, tmp_path):
        out = tmp_path / "dim.csv"
        assert run(["exp-dim", *self.ARGS, "--source-dims", "6", "--targets", "2,6",
                    "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 4  # header + native + 2 targets
        assert (tmp_path / "dim.plot.csv").exists()

    def test_exp_volume(self, tmp_path):
        out = tmp_path / "vol.csv"
        assert run(["exp-volume", *self.ARGS, "--volumes", "5,10",
                    "--thresholds", "0.0,0.6", "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 5

    def test_bench(self, tmp_path):
        out = tmp_path / "bench.csv"
        assert run(["bench", *self.ARGS, "--algorithms", "birch,kmeans",
                    "--sizes", "30,60", "--out", str(out)]) == 0
        assert len(out.read_text().splitlines()) == 5

    def test_bench_kernels(self, tmp_path, capsys):
        out = tmp_path / "bk.csv"
        assert run(["bench-kernels", "--sizes", "64", "--dim", "6", "--repeats", "1",
                    "--out", str(out)]) == 0
        assert "active backend:" in capsys.readouterr().out  # printed alongside the file
