"""Representation database: feature vectors with meta-information.

Entries carry a task id, sensor type, UTC epoch-second timestamp and an
optional label. Ids are monotonically assigned integers and the vector
dimension is uniform across the database. Persistence is JSON Lines, one
entry per line with exactly the keys ``id``, ``vector``, ``task_id``,
``sensor_type``, ``measured_at``, ``label``; floats are written in
round-trip-exact form so save/load is bit-exact.

``retain_exemplars`` keeps only the vectors deemed characteristic of each
subcluster of a fitted tree: the ``cap`` entries closest to the subcluster
centroid (ties toward the lower id).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .cftree import CfTree
from .vectors import as_vector

_FIELDS = ("id", "vector", "task_id", "sensor_type", "measured_at", "label")


@dataclass(frozen=True)
class Representation:
    id: int
    vector: np.ndarray
    task_id: str
    sensor_type: str
    measured_at: int  # seconds since epoch, UTC
    label: str | None = None

    def __eq__(self, other):
        if not isinstance(other, Representation):
            return NotImplemented
        return (
            self.id == other.id
            and np.array_equal(self.vector, other.vector)
            and self.task_id == other.task_id
            and self.sensor_type == other.sensor_type
            and self.measured_at == other.measured_at
            and self.label == other.label
        )


@dataclass(frozen=True)
class RetentionReport:
    """Kept/dropped counts per subcluster after exemplar retention."""

    per_subcluster: tuple[tuple[int, int, int], ...]  # (subcluster, kept, dropped)
    kept: int
    dropped: int


class RepresentationDb:
    """In-memory store of Representations, ordered by id.

    Many readers or one writer; save/load are exclusive.
    """

    def __init__(self):
        self._entries: list[Representation] = []
        self.dim: int | None = None
        self._next_id = 0

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self):
        return iter(self._entries)

    def __eq__(self, other):
        if not isinstance(other, RepresentationDb):
            return NotImplemented
        return self._entries == other._entries

    @property
    def entries(self) -> list[Representation]:
        return list(self._entries)

    def insert(self, vector, task_id: str, sensor_type: str, measured_at: int,
               label: str | None = None) -> int:
        """Store a new entry; returns its fresh id."""
        v = as_vector(vector)
        if self.dim is None:
            self.dim = v.shape[0]
        elif v.shape[0] != self.dim:
            raise ValueError(f"dimension mismatch: expected {self.dim}, got {v.shape[0]}")
        rep = Representation(
            id=self._next_id,
            vector=v.copy(),
            task_id=str(task_id),
            sensor_type=str(sensor_type),
            measured_at=int(measured_at),
            label=None if label is None else str(label),
        )
        self._entries.append(rep)
        self._next_id += 1
        return rep.id

    def query(self, task_id: str | None = None, sensor_type: str | None = None,
              label: str | None = None,
              time_range: tuple[int, int] | None = None) -> list[Representation]:
        """Entries matching every given predicate, in id order.

        ``time_range`` is an inclusive (start, end) pair of epoch seconds.
        """
        out = []
        for rep in self._entries:
            if task_id is not None and rep.task_id != task_id:
                continue
            if sensor_type is not None and rep.sensor_type != sensor_type:
                continue
            if label is not None and rep.label != label:
                continue
            if time_range is not None and not time_range[0] <= rep.measured_at <= time_range[1]:
                continue
            out.append(rep)
        return out

    def vectors(self) -> np.ndarray:
        """(n, d) matrix of all vectors in id order."""
        if not self._entries:
            return np.empty((0, self.dim or 0))
        return np.vstack([rep.vector for rep in self._entries])

    def task_ids(self) -> list[str]:
        """Distinct task ids in first-seen order."""
        seen: dict[str, None] = {}
        for rep in self._entries:
            seen.setdefault(rep.task_id, None)
        return list(seen)

    def retain_exemplars(self, tree: CfTree, per_cluster_cap: int) -> RetentionReport:
        """Prune to the ``per_cluster_cap`` entries nearest each subcluster
        centroid of a tree fitted on this database's vectors."""
        if per_cluster_cap < 1:
            raise ValueError("per_cluster_cap must be >= 1")
        if tree.root is None:
            raise ValueError("tree is empty / not fitted")
        if tree.dim != self.dim:
            raise ValueError(f"tree dimension {tree.dim} != database dimension {self.dim}")
        idx, dist = tree.predict_many(self.vectors())
        keep_ids: set[int] = set()
        per_subcluster = []
        k = tree.centroids().shape[0]
        for c in range(k):
            in_c = np.flatnonzero(idx == c)
            ranked = sorted(in_c, key=lambda t: (dist[t], self._entries[t].id))
            kept = ranked[:per_cluster_cap]
            keep_ids.update(self._entries[t].id for t in kept)
            per_subcluster.append((c, len(kept), len(ranked) - len(kept)))
        before = len(self._entries)
        self._entries = [rep for rep in self._entries if rep.id in keep_ids]
        return RetentionReport(
            per_subcluster=tuple(per_subcluster),
            kept=len(self._entries),
            dropped=before - len(self._entries),
        )

    def merge_import(self, imported: "RepresentationDb") -> "RepresentationDb":
        """Append another database's entries under fresh ids; existing ids
        are untouched. Returns self."""
        if len(imported) and self.dim is not None and imported.dim != self.dim:
            raise ValueError(f"dimension mismatch: {imported.dim} vs {self.dim}")
        for rep in imported:
            self.insert(rep.vector, rep.task_id, rep.sensor_type, rep.measured_at, rep.label)
        return self

    # -- persistence -------------------------------------------------------

    def save(self, destination) -> None:
        """Write JSON Lines; one entry per line, keys exactly ``_FIELDS``."""
        with open(destination, "w", encoding="utf-8", newline="\n") as fh:
            for rep in self._entries:
                fh.write(json.dumps({
                    "id": rep.id,
                    "vector": [float(v) for v in rep.vector],
                    "task_id": rep.task_id,
                    "sensor_type": rep.sensor_type,
                    "measured_at": rep.measured_at,
                    "label": rep.label,
                }) + "\n")

    @classmethod
    def load(cls, source) -> "RepresentationDb":
        """Read JSON Lines written by ``save``; malformed or inconsistent
        records raise ValueError naming the offending line."""
        db = cls()
        seen_ids: set[int] = set()
        with open(source, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    raise ValueError(f"{source}: line {lineno}: blank line")
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{source}: line {lineno}: invalid JSON ({exc.msg})") from None
                if not isinstance(obj, dict):
                    raise ValueError(f"{source}: line {lineno}: expected an object")
                extra = set(obj) - set(_FIELDS)
                missing = set(_FIELDS) - set(obj)
                if extra:
                    raise ValueError(f"{source}: line {lineno}: unknown keys {sorted(extra)}")
                if missing:
                    raise ValueError(f"{source}: line {lineno}: missing keys {sorted(missing)}")
                rep = _parse_record(obj, source, lineno)
                if rep.id in seen_ids:
                    raise ValueError(f"{source}: line {lineno}: duplicate id {rep.id}")
                seen_ids.add(rep.id)
                if db.dim is None:
                    db.dim = rep.vector.shape[0]
                elif rep.vector.shape[0] != db.dim:
                    raise ValueError(
                        f"{source}: line {lineno}: vector dimension {rep.vector.shape[0]} != {db.dim}"
                    )
                db._entries.append(rep)
        db._entries.sort(key=lambda rep: rep.id)
        db._next_id = db._entries[-1].id + 1 if db._entries else 0
        return db


def _parse_record(obj: dict, source, lineno: int) -> Representation:
    if not isinstance(obj["id"], int) or isinstance(obj["id"], bool) or obj["id"] < 0:
        raise ValueError(f"{source}: line {lineno}: id must be a non-negative integer")
    if not isinstance(obj["vector"], list) or not obj["vector"]:
        raise ValueError(f"{source}: line {lineno}: vector must be a non-empty array")
    try:
        vec = as_vector(obj["vector"])
    except ValueError as exc:
        raise ValueError(f"{source}: line {lineno}: {exc}") from None
    if not isinstance(obj["task_id"], str) or not isinstance(obj["sensor_type"], str):
        raise ValueError(f"{source}: line {lineno}: task_id and sensor_type must be strings")
    if not isinstance(obj["measured_at"], int) or isinstance(obj["measured_at"], bool):
        raise ValueError(f"{source}: line {lineno}: measured_at must be an integer")
    if obj["label"] is not None and not isinstance(obj["label"], str):
        raise ValueError(f"{source}: line {lineno}: label must be a string or null")
    return Representation(
        id=obj["id"],
        vector=vec,
        task_id=obj["task_id"],
        sensor_type=obj["sensor_type"],
        measured_at=obj["measured_at"],
        label=obj["label"],
    )
