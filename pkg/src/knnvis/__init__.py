"""Large-scale visualization of high-dimensional points via approximate KNN graphs."""

from .core import DataMatrix, InvalidConfigError, InvalidInputError, RngState, as_data_matrix
from .evaluation import LabeledSet, brute_force_knn, knn_classify_accuracy, metrics_json, recall
from .io import ParseError, UnsupportedDimensionError, emit_svg, ingest_labels, ingest_vectors
from .knn import GraphConfig, build_knn_graph, explore_once
from .layout import Embedding, LayoutConfig, LinkFunction, train
from .neighbors import NeighborLists
from .pipeline import StageError, resolve_configs, run_pipeline
from .rptree import build_forest, knn_from_forest
from .sampler import build_alias, sample_edge, sample_negative
from .synth import gaussian_mixture
from .weighting import WeightedGraph, calibrate_sigma, weigh_graph

__version__ = "0.1.0"

__all__ = [
    "DataMatrix", "InvalidConfigError", "InvalidInputError", "RngState", "as_data_matrix",
    "LabeledSet", "brute_force_knn", "knn_classify_accuracy", "metrics_json", "recall",
    "ParseError", "UnsupportedDimensionError", "emit_svg", "ingest_labels", "ingest_vectors",
    "GraphConfig", "build_knn_graph", "explore_once",
    "Embedding", "LayoutConfig", "LinkFunction", "train",
    "NeighborLists", "StageError", "resolve_configs", "run_pipeline",
    "build_forest", "knn_from_forest", "build_alias", "sample_edge", "sample_negative",
    "gaussian_mixture", "WeightedGraph", "calibrate_sigma", "weigh_graph",
]
