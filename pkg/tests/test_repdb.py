import json

import numpy as np
import pytest

from transfercluster import BirchParams, CfTree, RepresentationDb


def make_db(entries):
    db = RepresentationDb()
    for vec, task, sensor, ts, label in entries:
        db.insert(vec, task, sensor, ts, label)
    return db


def synthetic_db(tasks=10, per_task=100, dim=4, seed=0):
    rng = np.random.default_rng(seed)
    db = RepresentationDb()
    for t in range(tasks):
        center = rng.standard_normal(dim) * 50
        for i in range(per_task):
            db.insert(center + rng.normal(0, 0.1, dim), f"PPV{t}", "pressure",
                      1_600_000_000 + t * 1000 + i, None)
    return db


class TestInsertAndQuery:
    def test_ids_monotonic_from_zero(self):
        db = RepresentationDb()
        assert db.insert([1.0, 2.0], "A", "s", 100) == 0
        assert db.insert([3.0, 4.0], "A", "s", 101) == 1
        assert len(db) == 2

    def test_dimension_mismatch(self):
        db = RepresentationDb()
        db.insert([1.0, 2.0], "A", "s", 100)
        with pytest.raises(ValueError, match="dimension"):
            db.insert([1.0], "A", "s", 101)

    def test_non_finite_rejected(self):
        db = RepresentationDb()
        with pytest.raises(ValueError):
            db.insert([np.nan], "A", "s", 100)

    def test_empty_filter_returns_all(self):
        db = synthetic_db(tasks=3, per_task=4)
        assert len(db.query()) == 12

    def test_query_by_task(self):
        db = synthetic_db(tasks=10, per_task=100, dim=3)
        hits = db.query(task_id="PPV3")
        assert len(hits) == 100
        assert all(r.task_id == "PPV3" for r in hits)

    def test_query_disjoint_time_range(self):
        db = synthetic_db(tasks=2, per_task=5)
        assert db.query(time_range=(0, 10)) == []

    def test_query_time_range_inclusive(self):
        db = make_db([([1.0], "A", "s", 100, None), ([2.0], "A", "s", 200, None)])
        assert len(db.query(time_range=(100, 200))) == 2
        assert len(db.query(time_range=(101, 199))) == 0

    def test_query_combined_predicates(self):
        db = make_db([
            ([1.0], "A", "pressure", 100, "ok"),
            ([2.0], "A", "pressure", 120, "bad"),
            ([3.0], "B", "pressure", 120, "ok"),
            ([4.0], "A", "flow", 120, "ok"),
        ])
        hits = db.query(task_id="A", sensor_type="pressure", label="ok")
        assert [r.id for r in hits] == [0]

    def test_query_results_in_id_order(self):
        db = synthetic_db(tasks=3, per_task=7)
        ids = [r.id for r in db.query(sensor_type="pressure")]
        assert ids == sorted(ids)


class TestRetention:
    def fit_tree(self, db, threshold=0.6):
        tree = CfTree(BirchParams(threshold=threshold, branching_factor=50))
        tree.insert_many(db.vectors())
        return tree

    def test_cap_larger_than_clusters_keeps_all(self):
        db = synthetic_db(tasks=2, per_task=5)
        tree = self.fit_tree(db)
        report = db.retain_exemplars(tree, per_cluster_cap=100)
        assert report.dropped == 0
        assert len(db) == 10

    def test_cap_one_leaves_k_entries(self):
        db = synthetic_db(tasks=4, per_task=20)
        tree = self.fit_tree(db)
        k = tree.centroids().shape[0]
        db.retain_exemplars(tree, per_cluster_cap=1)
        assert len(db) == k

    def test_nearest_to_centroid_survive(self, two_blobs):
        data, _ = two_blobs(n_per=10, distance=100.0, noise=1.0, seed=1)
        db = RepresentationDb()
        for i, row in enumerate(data):
            db.insert(row, "A" if i < 10 else "B", "s", i)
        tree = self.fit_tree(db, threshold=5.0)
        centroids = tree.centroids()
        idx, dist = tree.predict_many(db.vectors())
        expected = set()
        for c in range(centroids.shape[0]):
            members = np.flatnonzero(idx == c)
            ranked = sorted(members, key=lambda t: (dist[t], t))
            expected.update(int(t) for t in ranked[:2])
        db.retain_exemplars(tree, per_cluster_cap=2)
        assert {r.id for r in db} == expected

    def test_report_counts(self):
        db = synthetic_db(tasks=3, per_task=10)
        tree = self.fit_tree(db)
        report = db.retain_exemplars(tree, per_cluster_cap=4)
        assert report.kept + report.dropped == 30
        assert report.kept == len(db)
        assert sum(k for _, k, _ in report.per_subcluster) == report.kept

    def test_unfitted_tree_rejected(self):
        db = synthetic_db(tasks=1, per_task=3)
        with pytest.raises(ValueError):
            db.retain_exemplars(CfTree(BirchParams()), 1)

    def test_never_increases_size(self):
        db = synthetic_db(tasks=2, per_task=6)
        tree = self.fit_tree(db)
        before = len(db)
        db.retain_exemplars(tree, per_cluster_cap=3)
        assert len(db) <= before


class TestPersistence:
    def test_empty_round_trip(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        db = RepresentationDb()
        db.save(path)
        assert RepresentationDb.load(path) == db

    def test_thousand_entry_round_trip(self, tmp_path):
        db = synthetic_db(tasks=10, per_task=100, dim=5, seed=3)
        path = tmp_path / "db.jsonl"
        db.save(path)
        loaded = RepresentationDb.load(path)
        assert loaded == db
        for a, b in zip(loaded, db):
            assert a.vector.tobytes() == b.vector.tobytes()  # bit-exact

    def test_save_format_exact_keys(self, tmp_path):
        db = make_db([([1.5], "A", "s", 100, None)])
        path = tmp_path / "db.jsonl"
        db.save(path)
        lines = path.read_text().splitlines()
        assert len(lines) == 1
        obj = json.loads(lines[0])
        assert set(obj) == {"id", "vector", "task_id", "sensor_type", "measured_at", "label"}
        assert obj["label"] is None

    def test_truncated_json_names_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        good = '{"id": 0, "vector": [1.0], "task_id": "A", "sensor_type": "s", "measured_at": 1, "label": null}'
        path.write_text(good + "\n" + good[: len(good) // 2] + "\n")
        with pytest.raises(ValueError, match="line 2"):
            RepresentationDb.load(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": 0, "vector": [1.0], "task_id": "A", "sensor_type": "s", '
                        '"measured_at": 1, "label": null, "extra": 1}\n')
        with pytest.raises(ValueError, match="unknown keys"):
            RepresentationDb.load(path)

    def test_missing_key_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": 0, "vector": [1.0]}\n')
        with pytest.raises(ValueError, match="missing keys"):
            RepresentationDb.load(path)

    def test_dimension_inconsistency_rejected(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text(
            '{"id": 0, "vector": [1.0], "task_id": "A", "sensor_type": "s", "measured_at": 1, "label": null}\n'
            '{"id": 1, "vector": [1.0, 2.0], "task_id": "A", "sensor_type": "s", "measured_at": 2, "label": null}\n'
        )
        with pytest.raises(ValueError, match="line 2"):
            RepresentationDb.load(path)

    def test_duplicate_id_rejected(self, tmp_path):
        line = '{"id": 0, "vector": [1.0], "task_id": "A", "sensor_type": "s", "measured_at": 1, "label": null}\n'
        path = tmp_path / "bad.jsonl"
        path.write_text(line + line)
        with pytest.raises(ValueError, match="duplicate id"):
            RepresentationDb.load(path)

    def test_insert_after_load_gets_fresh_id(self, tmp_path):
        db = make_db([([1.0], "A", "s", 1, None), ([2.0], "B", "s", 2, None)])
        path = tmp_path / "db.jsonl"
        db.save(path)
        loaded = RepresentationDb.load(path)
        assert loaded.insert([3.0], "C", "s", 3) == 2


class TestMergeImport:
    def test_merge_with_empty_unchanged(self):
        db = synthetic_db(tasks=2, per_task=3)
        before = db.entries
        db.merge_import(RepresentationDb())
        assert db.entries == before

    def test_disjoint_task_union(self):
        a = make_db([([1.0], "A", "s", 1, None)])
        b = make_db([([2.0], "B", "s", 2, None)])
        a.merge_import(b)
        assert a.task_ids() == ["A", "B"]
        assert len(a.query(task_id="B")) == 1

    def test_fresh_ids_and_counts(self):
        a = synthetic_db(tasks=2, per_task=5, seed=1)
        b = synthetic_db(tasks=3, per_task=4, dim=4, seed=2)
        original_ids = [r.id for r in a]
        a.merge_import(b)
        assert [r.id for r in a][: len(original_ids)] == original_ids
        assert len(a.query(task_id="PPV2")) == 4  # only the import had PPV2
        assert len({r.id for r in a}) == len(a)

    def test_dimension_mismatch(self):
        a = make_db([([1.0, 2.0], "A", "s", 1, None)])
        b = make_db([([1.0], "B", "s", 1, None)])
        with pytest.raises(ValueError, match="dimension"):
            a.merge_import(b)
