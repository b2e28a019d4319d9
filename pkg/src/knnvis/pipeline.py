"""Two-stage pipeline: KNN graph construction, then layout."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Optional

from .core import as_data_matrix
from .evaluation import brute_force_knn, knn_classify_accuracy, recall
from .knn import GraphConfig, build_knn_graph
from .layout import Embedding, LayoutConfig, LinkFunction, train
from .weighting import WeightedGraph, weigh_graph

DESK_SCALE_N = 10_000
DESK_K = 15
DESK_SAMPLES_PER_NODE = 20_000
CLASSIFIER_K = 5


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


@dataclass
class PipelineResult:
    embedding: Embedding
    graph: WeightedGraph
    graph_config: GraphConfig
    layout_config: LayoutConfig
    timings: dict = field(default_factory=dict)
    recall_by_iteration: list = field(default_factory=list)
    mean_recall: Optional[float] = None
    knn_accuracy: Optional[float] = None

    def metrics(self) -> dict:
        return {
            "mean_recall": self.mean_recall,
            "knn_accuracy": self.knn_accuracy,
            "k": self.graph_config.k,
            "n": self.graph.n_vertices,
        }


def resolve_configs(n: int, *, trees=None, k=None, iters=None, perplexity=None,
                    leaf_capacity=None, dim=None, negatives=None, gamma=None,
                    samples_per_node=None, rate=None, link=None, a=None,
                    workers=None, seed=None, clip=None, epsilon=None):
    """Fill unset tunables with defaults, scaled down when ``n`` is small.

    Below ``DESK_SCALE_N`` points the neighbor count defaults to
    ``min(150, 15)``, perplexity to a third of it, and the sample budget to
    20,000 per node.  ``k`` is always capped at ``n - 1``.
    """
    g_default = GraphConfig()
    l_default = LayoutConfig()
    desk = n < DESK_SCALE_N
    if k is None:
        k = min(g_default.k, DESK_K) if desk else g_default.k
    k = max(1, min(int(k), n - 1)) if n > 1 else 1
    if perplexity is None:
        perplexity = g_default.perplexity
        if desk:
            perplexity = max(2.0, min(perplexity, k / 3.0))
    if samples_per_node is None:
        samples_per_node = DESK_SAMPLES_PER_NODE if desk else l_default.samples_per_node
    seed = 0 if seed is None else int(seed)
    workers = 1 if workers is None else int(workers)
    gcfg = GraphConfig(
        n_trees=g_default.n_trees if trees is None else int(trees),
        k=k,
        iterations=g_default.iterations if iters is None else int(iters),
        perplexity=float(perplexity),
        leaf_capacity=leaf_capacity,
        seed=seed,
    )
    lcfg = LayoutConfig(
        dim=l_default.dim if dim is None else int(dim),
        link=LinkFunction(link or "invq", l_default.link.a if a is None else float(a)),
        negatives=l_default.negatives if negatives is None else int(negatives),
        gamma=l_default.gamma if gamma is None else float(gamma),
        samples_per_node=int(samples_per_node),
        rate=l_default.rate if rate is None else float(rate),
        workers=workers,
        clip=l_default.clip if clip is None else float(clip),
        epsilon=l_default.epsilon if epsilon is None else float(epsilon),
        seed=seed,
    )
    return gcfg, lcfg


def config_record(gcfg: GraphConfig, lcfg: LayoutConfig) -> dict:
    layout = asdict(lcfg)
    layout["link"] = {"kind": lcfg.link.kind, "a": lcfg.link.a}
    return {"graph": gcfg.as_dict(), "layout": layout}


def configs_from_record(record: dict):
    g = dict(record["graph"])
    lay = dict(record["layout"])
    lay["link"] = LinkFunction(**lay["link"])
    return GraphConfig(**g), LayoutConfig(**lay)


def _stage(name, timings, fn, *args, **kwargs):
    t0 = time.perf_counter()
    try:
        out = fn(*args, **kwargs)
    except Exception as exc:  # re-raised with the stage tag
        raise StageError(name, exc) from exc
    timings[name] = round(time.perf_counter() - t0, 6)
    return out


def run_pipeline(data, gcfg: GraphConfig, lcfg: LayoutConfig, labels=None,
                 exact_recall: bool = False) -> PipelineResult:
    data = _stage("ingest", {}, as_data_matrix, data)
    timings = {}
    exact = None
    if exact_recall:
        exact = _stage("exact_knn", timings, brute_force_knn, data, gcfg.k)
    recalls = []

    def trace(_, lists):
        if exact is not None:
            recalls.append(recall(lists, exact).mean)

    lists = _stage("knn_graph", timings, build_knn_graph, data, gcfg,
                   lcfg.workers, trace)
    graph = _stage("weighting", timings, weigh_graph, data, lists, gcfg.perplexity)
    emb = _stage("layout", timings, train, graph, lcfg)
    result = PipelineResult(emb, graph, gcfg, lcfg, timings, recalls)
    if exact is not None:
        result.mean_recall = recalls[-1]
    if labels is not None and data.n_points > CLASSIFIER_K:
        result.knn_accuracy = _stage("evaluate", timings, knn_classify_accuracy,
                                     emb, labels, CLASSIFIER_K)
    return result
