"""Transfer case selection: demand check and similarity check.

The demand check watches a stream of operating-metric values (higher =
better) and triggers when the mean of the most recent window drops strictly
below the preceding baseline window's mean scaled by (1 - degradation
ratio).

The similarity check assigns each query vector to its nearest subcluster of
a tree fitted on the representation database. A vector matches when its
centroid distance is within the similarity threshold; it then inherits the
subcluster's dominant task (majority of database entries assigned to that
subcluster, lexicographic tie-break). Tasks explaining at least the minimum
fraction of the query become ranked transfer candidates; if none qualify the
outcome is an explicit NoTransfer. Per-vector similarity is the
threshold-normalized score 1 - distance/threshold, clamped to [0, 1].
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .cftree import CfTree
from .repdb import RepresentationDb
from .vectors import as_matrix


@dataclass(frozen=True)
class DemandCheckConfig:
    baseline_window: int
    recent_window: int
    degradation_ratio: float

    def __post_init__(self):
        if self.baseline_window < 1 or self.recent_window < 1:
            raise ValueError("windows must be >= 1")
        if not 0 < self.degradation_ratio < 1:
            raise ValueError(f"degradation_ratio must be in (0, 1), got {self.degradation_ratio}")


@dataclass(frozen=True)
class DemandCheckResult:
    triggered: bool
    baseline: float
    recent: float


def demand_check(metric_history, config: DemandCheckConfig) -> DemandCheckResult:
    """Compare the recent window mean against the baseline window mean.

    Triggers iff recent < baseline * (1 - degradation_ratio), strictly.
    Metrics are higher-is-better; negate loss-like metrics before calling.
    """
    values = np.asarray(list(metric_history), dtype=np.float64)
    needed = config.baseline_window + config.recent_window
    if values.shape[0] < needed:
        raise ValueError(f"need at least {needed} metric values, got {values.shape[0]}")
    if not np.all(np.isfinite(values)):
        raise ValueError("metric history contains NaN or Inf")
    recent = float(values[-config.recent_window:].mean())
    baseline = float(values[-needed:-config.recent_window].mean())
    return DemandCheckResult(
        triggered=recent < baseline * (1.0 - config.degradation_ratio),
        baseline=baseline,
        recent=recent,
    )


class TransferOutcome(enum.Enum):
    TRANSFER = "transfer"
    NO_TRANSFER = "no_transfer"


@dataclass(frozen=True)
class QueryMatch:
    """Nearest subcluster of one query vector with its attribution."""

    query_index: int
    subcluster: int
    distance: float
    task_id: str | None  # dominant task of the subcluster
    matched: bool


@dataclass(frozen=True)
class TransferCandidate:
    task_id: str
    mean_similarity: float    # in [0, 1]
    matched_fraction: float   # in [0, 1]


@dataclass(frozen=True)
class TransferDecision:
    outcome: TransferOutcome
    candidates: tuple[TransferCandidate, ...]  # ranked; non-empty iff TRANSFER
    per_vector: tuple[QueryMatch, ...]


def dominant_tasks(db: RepresentationDb, tree: CfTree) -> list[str | None]:
    """Majority task id per subcluster over the database entries assigned to
    it (nearest centroid); ties break lexicographically, empty subclusters
    get None."""
    k = tree.centroids().shape[0]
    idx, _ = tree.predict_many(db.vectors())
    buckets: list[Counter] = [Counter() for _ in range(k)]
    for rep, c in zip(db, idx):
        buckets[int(c)][rep.task_id] += 1
    out: list[str | None] = []
    for counter in buckets:
        if not counter:
            out.append(None)
            continue
        top = max(counter.values())
        out.append(min(t for t, c in counter.items() if c == top))
    return out


def similarity_check(db: RepresentationDb, tree: CfTree, query,
                     similarity_threshold: float = 0.6,
                     min_matched_fraction: float = 0.5) -> TransferDecision:
    """Rank stored tasks by similarity to the query vectors.

    Deterministic, order-free over the query list; see the module docstring
    for the matching and scoring rules.
    """
    if not similarity_threshold > 0:
        raise ValueError(f"similarity_threshold must be > 0, got {similarity_threshold}")
    if not 0 < min_matched_fraction <= 1:
        raise ValueError(f"min_matched_fraction must be in (0, 1], got {min_matched_fraction}")
    if tree.root is None:
        raise ValueError("tree is empty / not fitted")
    if len(db) == 0:
        raise ValueError("representation database is empty")
    q = as_matrix(query)
    if q.shape[0] == 0:
        raise ValueError("query must contain at least one vector")
    if q.shape[1] != tree.dim:
        raise ValueError(f"dimension mismatch: query d={q.shape[1]}, tree d={tree.dim}")
    q_idx, q_dist = tree.predict_many(q)
    dominant = dominant_tasks(db, tree)
    per_vector = []
    per_task_sims: dict[str, list[float]] = {}
    for i in range(q.shape[0]):
        sub = int(q_idx[i])
        d = float(q_dist[i])
        task = dominant[sub]
        matched = d <= similarity_threshold and task is not None
        per_vector.append(QueryMatch(i, sub, d, task, matched))
        if matched:
            sim = min(max(1.0 - d / similarity_threshold, 0.0), 1.0)
            per_task_sims.setdefault(task, []).append(sim)
    total = q.shape[0]
    candidates = [
        TransferCandidate(
            task_id=task,
            mean_similarity=float(np.mean(sims)),
            matched_fraction=len(sims) / total,
        )
        for task, sims in per_task_sims.items()
        if len(sims) / total >= min_matched_fraction
    ]
    candidates.sort(key=lambda c: (-c.mean_similarity, c.task_id))
    outcome = TransferOutcome.TRANSFER if candidates else TransferOutcome.NO_TRANSFER
    return TransferDecision(
        outcome=outcome,
        candidates=tuple(candidates),
        per_vector=tuple(per_vector),
    )


def select_transfer_cases(decision: TransferDecision, top_k: int) -> list[str]:
    """Task ids of the best-ranked candidates (at most ``top_k``); empty for
    a NoTransfer decision."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    return [c.task_id for c in decision.candidates[:top_k]]
