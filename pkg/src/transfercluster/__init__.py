"""Streaming clustering for transfer case selection.

Incremental CF-tree clustering with silhouette validation, baseline
clusterers for comparison, a representation database of characteristic
feature vectors, a transfer-demand/similarity decision pipeline, and an
experiment harness with synthetic PPV datasets.
"""

from .baselines import (
    NOISE,
    LabelAssignment,
    agglomerative_fit,
    dbscan_fit,
    kmeans_fit,
    minibatch_kmeans_fit,
    seeded_sample_init,
)
from .cftree import (
    BirchParams,
    CfTree,
    ClusteringFeature,
    ClusterModel,
    birch_fit,
    birch_insert,
    birch_predict,
    birch_subclusters,
    cf_from_point,
    cf_merge,
)
from .repdb import Representation, RepresentationDb, RetentionReport
from .synth import Dataset, SyntheticSpec, gen_synthetic, load_dataset, save_dataset
from .transfer import (
    DemandCheckConfig,
    DemandCheckResult,
    QueryMatch,
    TransferCandidate,
    TransferDecision,
    TransferOutcome,
    demand_check,
    select_transfer_cases,
    similarity_check,
)
from .validation import SilhouetteReport, silhouette, silhouette_oracle
from .vectors import PcaModel, euclidean_distance, pca_fit, pca_transform

__version__ = "0.1.0"

__all__ = [
    "NOISE",
    "BirchParams",
    "CfTree",
    "ClusterModel",
    "ClusteringFeature",
    "Dataset",
    "DemandCheckConfig",
    "DemandCheckResult",
    "LabelAssignment",
    "PcaModel",
    "QueryMatch",
    "Representation",
    "RepresentationDb",
    "RetentionReport",
    "SilhouetteReport",
    "SyntheticSpec",
    "TransferCandidate",
    "TransferDecision",
    "TransferOutcome",
    "agglomerative_fit",
    "birch_fit",
    "birch_insert",
    "birch_predict",
    "birch_subclusters",
    "cf_from_point",
    "cf_merge",
    "dbscan_fit",
    "demand_check",
    "euclidean_distance",
    "gen_synthetic",
    "kmeans_fit",
    "load_dataset",
    "minibatch_kmeans_fit",
    "pca_fit",
    "pca_transform",
    "save_dataset",
    "seeded_sample_init",
    "select_transfer_cases",
    "silhouette",
    "silhouette_oracle",
    "similarity_check",
]
