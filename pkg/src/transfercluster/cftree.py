"""Height-balanced tree of clustering features for incremental clustering.

A clustering feature (CF) is the additive triple (n, ls, ss) from which the
centroid and radius of a group of vectors are derived. Points are inserted
one at a time: the tree is descended greedily by nearest entry centroid, the
point is absorbed into the nearest leaf subcluster when the merged radius
stays within the distance threshold and starts a new subcluster otherwise.
Nodes that exceed the branching factor are split around the farthest pair of
entry centroids and the split propagates upward; a root split grows the tree
by one level. Leaf subclusters ARE the clusters: there is no global
refinement phase, no rebuilding and no outlier handling.

Every decision (descent, absorption, split seeding, assignment) breaks ties
toward the lowest index, so identical insertion sequences produce
bit-identical trees.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .vectors import as_matrix, as_vector


@dataclass(eq=False)
class ClusteringFeature:
    """Additive summary (count, linear sum, sum of squared norms) of a vector set."""

    n: int
    ls: np.ndarray
    ss: float

    @property
    def centroid(self) -> np.ndarray:
        return self.ls / self.n

    @property
    def radius(self) -> float:
        """RMS distance of the member vectors to the centroid (>= 0)."""
        c = self.ls / self.n
        return float(np.sqrt(max(self.ss / self.n - c @ c, 0.0)))

    def merge(self, other: "ClusteringFeature") -> "ClusteringFeature":
        if self.ls.shape[0] != other.ls.shape[0]:
            raise ValueError(
                f"dimension mismatch: {self.ls.shape[0]} vs {other.ls.shape[0]}"
            )
        return ClusteringFeature(self.n + other.n, self.ls + other.ls, self.ss + other.ss)


def cf_from_point(x) -> ClusteringFeature:
    """CF of a single vector: (1, x, ||x||^2), radius 0."""
    v = as_vector(x)
    return ClusteringFeature(1, v.copy(), float(v @ v))


def cf_merge(a: ClusteringFeature, b: ClusteringFeature) -> ClusteringFeature:
    """Componentwise sum of two CFs (commutative, associative)."""
    return a.merge(b)


@dataclass(frozen=True)
class BirchParams:
    """Distance threshold (max leaf subcluster radius after absorbing a
    point) and branching factor (max entries per node)."""

    threshold: float = 0.6
    branching_factor: int = 50

    def __post_init__(self):
        if not (np.isfinite(self.threshold) and self.threshold >= 0):
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")
        if self.branching_factor < 2:
            raise ValueError(f"branching_factor must be >= 2, got {self.branching_factor}")


class _Node:
    __slots__ = ("leaf", "entries", "children", "_cmat")

    def __init__(self, leaf: bool):
        self.leaf = leaf
        self.entries: list[ClusteringFeature] = []
        self.children: list[_Node] | None = None if leaf else []
        self._cmat: np.ndarray | None = None

    def centroids(self) -> np.ndarray:
        if self._cmat is None:
            self._cmat = np.array([cf.ls / cf.n for cf in self.entries])
        return self._cmat

    def set_entry(self, i: int, cf: ClusteringFeature) -> None:
        self.entries[i] = cf
        if self._cmat is not None:
            self._cmat[i] = cf.ls / cf.n


class CfTree:
    """Incrementally built CF tree; see the module docstring for semantics.

    Insertion requires exclusive access; once fitting is done the tree is
    treated as immutable and prediction may run concurrently.
    """

    def __init__(self, params: BirchParams):
        self.params = params
        self.root: _Node | None = None
        self.dim: int | None = None
        self.n_inserted = 0
        self._centroid_cache: np.ndarray | None = None
        self._target: tuple[_Node, ClusteringFeature] | None = None

    # -- insertion ---------------------------------------------------------

    def insert(self, x) -> int:
        """Insert one vector; returns the index of the absorbing or newly
        created subcluster in stable leaf order."""
        v = as_vector(x)
        if self.dim is None:
            self.dim = v.shape[0]
        elif v.shape[0] != self.dim:
            raise ValueError(f"dimension mismatch: expected {self.dim}, got {v.shape[0]}")
        xcf = cf_from_point(v)
        self._centroid_cache = None
        if self.root is None:
            leaf = _Node(leaf=True)
            leaf.entries.append(xcf)
            self.root = leaf
            self.n_inserted = 1
            self._target = (leaf, xcf)
            return 0
        split = self._insert(self.root, v, xcf)
        if split is not None:
            cf_a, node_a, cf_b, node_b = split
            new_root = _Node(leaf=False)
            new_root.entries = [cf_a, cf_b]
            new_root.children = [node_a, node_b]
            self.root = new_root
        self.n_inserted += 1
        return self._locate_target()

    def insert_many(self, data) -> np.ndarray:
        """Insert vectors in order; returns the per-point subcluster indices."""
        x = as_matrix(data)
        return np.array([self.insert(row) for row in x], dtype=np.int64)

    def _insert(self, node: _Node, x: np.ndarray, xcf: ClusteringFeature):
        b = self.params.branching_factor
        if node.leaf:
            nearest = int(kernels.assign_nearest(x[None, :], node.centroids())[0][0])
            merged = node.entries[nearest].merge(xcf)
            if merged.radius <= self.params.threshold:
                node.set_entry(nearest, merged)
                self._target = (node, merged)
                return None
            node.entries.append(xcf)
            node._cmat = None
            self._target = (node, xcf)
            if len(node.entries) > b:
                return self._split(node)
            return None
        ci = int(kernels.assign_nearest(x[None, :], node.centroids())[0][0])
        result = self._insert(node.children[ci], x, xcf)
        if result is None:
            node.set_entry(ci, node.entries[ci].merge(xcf))
            return None
        cf_a, node_a, cf_b, node_b = result
        node.entries[ci] = cf_a
        node.children[ci] = node_a
        node.entries.insert(ci + 1, cf_b)
        node.children.insert(ci + 1, node_b)
        node._cmat = None
        if len(node.entries) > b:
            return self._split(node)
        return None

    def _split(self, node: _Node):
        """Split an overfull node around the farthest pair of entry centroids.

        The original node object is reused for the first seed's half; a new
        sibling holds the second half. Remaining entries go to the nearer
        seed, ties to the first seed. Returns (cf_a, node_a, cf_b, node_b)
        for the parent.
        """
        cents = node.centroids()
        dist = kernels.pairwise_distances(cents, cents)
        tri = np.triu(dist, k=1)
        flat = int(np.argmax(tri))  # row-major: ties pick the lowest (i, j)
        seed_a, seed_b = divmod(flat, tri.shape[1])
        if seed_a == seed_b:  # all centroids coincide; any two entries work
            seed_a, seed_b = 0, 1
        sibling = _Node(leaf=node.leaf)
        a_entries: list[ClusteringFeature] = []
        a_children: list[_Node] = []
        for t in range(len(node.entries)):
            if t == seed_a:
                to_a = True
            elif t == seed_b:
                to_a = False
            else:
                to_a = dist[t, seed_a] <= dist[t, seed_b]
            if to_a:
                a_entries.append(node.entries[t])
                if not node.leaf:
                    a_children.append(node.children[t])
            else:
                sibling.entries.append(node.entries[t])
                if not node.leaf:
                    sibling.children.append(node.children[t])
        node.entries = a_entries
        if not node.leaf:
            node.children = a_children
        node._cmat = None
        if node.leaf and self._target[0] is node and not any(
            e is self._target[1] for e in node.entries
        ):
            self._target = (sibling, self._target[1])
        cf_a = _fold(node.entries)
        cf_b = _fold(sibling.entries)
        return cf_a, node, cf_b, sibling

    def _locate_target(self) -> int:
        leaf, cf = self._target
        offset = 0
        for node in self._leaves():
            if node is leaf:
                for i, entry in enumerate(node.entries):
                    if entry is cf:
                        return offset + i
                break
            offset += len(node.entries)
        raise RuntimeError("inserted subcluster not found in its leaf")

    # -- read access -------------------------------------------------------

    def _leaves(self):
        """Leaves in depth-first order: the canonical stable order."""
        if self.root is None:
            return
        stack = [self.root]
        while stack:
            node = stack.pop()
            if node.leaf:
                yield node
            else:
                stack.extend(reversed(node.children))

    def subclusters(self) -> list[ClusteringFeature]:
        """Leaf subclusters in stable (depth-first) order."""
        return [cf for leaf in self._leaves() for cf in leaf.entries]

    def centroids(self) -> np.ndarray:
        """(k, d) matrix of subcluster centroids in stable order."""
        if self.root is None:
            raise ValueError("empty tree")
        if self._centroid_cache is None:
            self._centroid_cache = np.vstack([leaf.centroids() for leaf in self._leaves()])
        return self._centroid_cache

    def predict(self, x) -> int:
        """Index of the subcluster with the nearest centroid; read-only."""
        idx, _ = self.predict_many(as_vector(x)[None, :])
        return int(idx[0])

    def predict_many(self, data) -> tuple[np.ndarray, np.ndarray]:
        """Nearest subcluster index and centroid distance per row."""
        if self.root is None:
            raise ValueError("empty tree")
        x = as_matrix(data)
        if x.shape[1] != self.dim:
            raise ValueError(f"dimension mismatch: expected {self.dim}, got {x.shape[1]}")
        return kernels.assign_nearest(x, self.centroids())

    def fingerprint(self):
        """Nested tuples capturing the exact structure and CF bits; two trees
        are bit-identical iff their fingerprints are equal."""
        def walk(node: _Node):
            cfs = tuple((cf.n, cf.ls.tobytes(), cf.ss) for cf in node.entries)
            if node.leaf:
                return ("leaf", cfs)
            return ("node", cfs, tuple(walk(c) for c in node.children))

        if self.root is None:
            return ("empty",)
        return walk(self.root)

    def stats(self) -> dict:
        """Node/leaf/subcluster counts and depth (model-size evidence)."""
        nodes = leaves = subclusters = 0
        depth = 0

        def walk(node: _Node, level: int):
            nonlocal nodes, leaves, subclusters, depth
            nodes += 1
            depth = max(depth, level)
            if node.leaf:
                leaves += 1
                subclusters += len(node.entries)
            else:
                for child in node.children:
                    walk(child, level + 1)

        if self.root is not None:
            walk(self.root, 1)
        return {"nodes": nodes, "leaves": leaves, "subclusters": subclusters, "depth": depth}

    def audit(self) -> dict:
        """Verify the structural invariants over the whole tree.

        Checks node occupancy, leaf radii against the threshold, consistency
        of every internal entry CF with the merge of its child's entries
        (1e-9 relative), and the total count against the number of inserted
        points. Returns the stats dict; raises ValueError on any violation.
        """
        if self.root is None:
            if self.n_inserted != 0:
                raise ValueError("empty tree with non-zero insert count")
            return self.stats()
        b = self.params.branching_factor

        def walk(node: _Node) -> ClusteringFeature:
            if not node.entries:
                raise ValueError("empty node")
            if len(node.entries) > b:
                raise ValueError(f"node with {len(node.entries)} entries exceeds branching factor {b}")
            if node.leaf:
                for cf in node.entries:
                    if cf.n < 1:
                        raise ValueError("leaf subcluster with n < 1")
                    if cf.radius > self.params.threshold:
                        raise ValueError(
                            f"leaf subcluster radius {cf.radius} exceeds threshold {self.params.threshold}"
                        )
                return _fold(node.entries)
            total = None
            for cf, child in zip(node.entries, node.children):
                below = walk(child)
                _check_close(cf, below)
                total = below if total is None else total.merge(below)
            return total

        root_cf = walk(self.root)
        if root_cf.n != self.n_inserted:
            raise ValueError(f"tree holds {root_cf.n} points, {self.n_inserted} were inserted")
        return self.stats()

    # -- persistence -------------------------------------------------------

    def to_dict(self) -> dict:
        def walk(node: _Node) -> dict:
            entries = [{"n": cf.n, "ls": cf.ls.tolist(), "ss": cf.ss} for cf in node.entries]
            if node.leaf:
                return {"leaf": True, "entries": entries}
            return {"leaf": False, "entries": entries, "children": [walk(c) for c in node.children]}

        return {
            "threshold": self.params.threshold,
            "branching_factor": self.params.branching_factor,
            "dim": self.dim,
            "n_inserted": self.n_inserted,
            "root": None if self.root is None else walk(self.root),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CfTree":
        tree = cls(BirchParams(payload["threshold"], payload["branching_factor"]))
        tree.dim = payload["dim"]
        tree.n_inserted = payload["n_inserted"]

        def walk(spec: dict) -> _Node:
            node = _Node(leaf=spec["leaf"])
            node.entries = [
                ClusteringFeature(e["n"], np.asarray(e["ls"], dtype=np.float64), float(e["ss"]))
                for e in spec["entries"]
            ]
            if not node.leaf:
                node.children = [walk(c) for c in spec["children"]]
            return node

        if payload["root"] is not None:
            tree.root = walk(payload["root"])
        return tree


def _fold(entries: list[ClusteringFeature]) -> ClusteringFeature:
    total = entries[0]
    for cf in entries[1:]:
        total = total.merge(cf)
    return total


def _check_close(stored: ClusteringFeature, recomputed: ClusteringFeature, rtol: float = 1e-9) -> None:
    if stored.n != recomputed.n:
        raise ValueError(f"entry count {stored.n} != subtree count {recomputed.n}")
    if not np.allclose(stored.ls, recomputed.ls, rtol=rtol, atol=1e-12):
        raise ValueError("entry linear sum inconsistent with subtree")
    if not np.isclose(stored.ss, recomputed.ss, rtol=rtol, atol=1e-12):
        raise ValueError("entry squared sum inconsistent with subtree")


# -- fitting ---------------------------------------------------------------


@dataclass(frozen=True)
class ClusterModel:
    """Subcluster centroids (stable order) and per-sample labels."""

    centroids: np.ndarray  # (k, d)
    labels: np.ndarray     # (n,) int64
    k: int


def birch_insert(tree: CfTree, x) -> int:
    """Insert one vector into the tree; see CfTree.insert."""
    return tree.insert(x)


def birch_fit(params: BirchParams, data) -> tuple[CfTree, ClusterModel]:
    """Fold the data (in order) into a fresh tree; labels are resolved
    afterwards by assigning every sample to its nearest final centroid."""
    x = as_matrix(data)
    if x.shape[0] == 0:
        raise ValueError("birch_fit requires non-empty data")
    tree = CfTree(params)
    tree.insert_many(x)
    labels, _ = tree.predict_many(x)
    centroids = tree.centroids()
    return tree, ClusterModel(centroids=centroids.copy(), labels=labels, k=centroids.shape[0])


def birch_predict(tree: CfTree, x) -> int:
    """Index of the subcluster with the nearest centroid; does not modify the tree."""
    return tree.predict(x)


def birch_subclusters(tree: CfTree) -> list[tuple[ClusteringFeature, np.ndarray]]:
    """Leaf subclusters with their centroids, in stable order."""
    return [(cf, cf.centroid) for cf in tree.subclusters()]
