"""Neighbor exploring on top of a random projection forest.

Each exploring pass offers every neighbor-of-neighbor of ``i`` to a bounded
max-heap that already holds ``i``'s current neighbors.  Keeping the current
neighbors in the heap means a pass can never drop a true neighbor, so recall
against the exact graph is non-decreasing from one pass to the next.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numba
import numpy as np

from .core import InvalidConfigError, RngState, as_data_matrix, sqdist
from .neighbors import NeighborLists, heap_drain, heap_push
from .rptree import build_forest, knn_from_forest, run_blocks

__all__ = [
    "ExploreConfig",
    "GraphConfig",
    "NeighborLists",
    "build_knn_graph",
    "explore_once",
]


@dataclass(frozen=True)
class ExploreConfig:
    iterations: int = 1
    k: int = 150

    def __post_init__(self):
        if self.iterations < 0:
            raise InvalidConfigError("iterations must be >= 0")
        if self.k < 1:
            raise InvalidConfigError("k must be >= 1")


@dataclass(frozen=True)
class GraphConfig:
    """Tunables for KNN graph construction and edge weighting.

    ``leaf_capacity=None`` resolves to ``max(k, 32)``.
    """

    n_trees: int = 15
    k: int = 150
    iterations: int = 1
    perplexity: float = 50.0
    leaf_capacity: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise InvalidConfigError("n_trees must be >= 1")
        if self.k < 1:
            raise InvalidConfigError("k must be >= 1")
        if self.iterations < 0:
            raise InvalidConfigError("iterations must be >= 0")
        if not self.perplexity > 1.0:
            raise InvalidConfigError("perplexity must be > 1")
        if self.leaf_capacity is not None and self.leaf_capacity < 1:
            raise InvalidConfigError("leaf_capacity must be >= 1")

    @property
    def resolved_leaf_capacity(self) -> int:
        return self.leaf_capacity if self.leaf_capacity is not None else max(self.k, 32)

    def as_dict(self) -> dict:
        d = asdict(self)
        d["leaf_capacity"] = self.resolved_leaf_capacity
        return d


@numba.njit(nogil=True, cache=True)
def _explore_block(data, old_i, old_d, lo, hi, out_i, out_d):
    n = data.shape[0]
    k_old = old_i.shape[1]
    k = out_i.shape[1]
    mark = np.zeros(n, dtype=np.int64)
    heap_d = np.empty(k, dtype=np.float64)
    heap_i = np.empty(k, dtype=np.int32)
    for i in range(lo, hi):
        stamp = i + 1
        mark[i] = stamp
        size = 0
        for p in range(k_old):
            j = old_i[i, p]
            if j < 0:
                break
            mark[j] = stamp
            size = heap_push(heap_d, heap_i, size, old_d[i, p], j)
        for p in range(k_old):
            j = old_i[i, p]
            if j < 0:
                break
            for q in range(k_old):
                m = old_i[j, q]
                if m < 0:
                    break
                if mark[m] == stamp:
                    continue
                mark[m] = stamp
                size = heap_push(heap_d, heap_i, size, sqdist(data[i], data[m]), m)
        heap_drain(heap_d, heap_i, size, out_d[i], out_i[i])


def explore_once(data, current: NeighborLists, k: Optional[int] = None,
                 workers: int = 1) -> NeighborLists:
    """One neighbor-of-neighbor refinement pass; ``current`` is not modified."""
    data = as_data_matrix(data)
    k = current.k if k is None else k
    if k < 1:
        raise InvalidConfigError("k must be >= 1")
    out = NeighborLists.empty(data.n_points, k)

    def kernel(lo, hi):
        _explore_block(data.values, current.indices, current.distances, lo, hi,
                       out.indices, out.distances)

    run_blocks(kernel, data.n_points, workers)
    return out


def build_knn_graph(data, cfg: GraphConfig, workers: int = 1,
                    on_stage: Optional[Callable[[int, NeighborLists], None]] = None
                    ) -> NeighborLists:
    """Forest search followed by ``cfg.iterations`` exploring passes.

    ``on_stage(t, lists)`` is called after the forest search (``t == 0``)
    and after each pass ``t``; the CLI uses it to trace recall.
    """
    data = as_data_matrix(data)
    rng = RngState(cfg.seed).fork(0)
    forest = build_forest(data, cfg.n_trees, cfg.resolved_leaf_capacity, rng, workers)
    lists = knn_from_forest(forest, data, cfg.k, workers)
    if on_stage is not None:
        on_stage(0, lists)
    for t in range(cfg.iterations):
        lists = explore_once(data, lists, cfg.k, workers)
        if on_stage is not None:
            on_stage(t + 1, lists)
    return lists
