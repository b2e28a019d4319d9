"""Random projection forests and leaf co-membership neighbor search.

Each internal node splits its subset with the perpendicular bisector of
two distinct member points drawn without replacement.  A point goes left
iff ``dot(normal, x) < offset``; points exactly on the plane go right.
Trees are stored flat: internal nodes index into ``hyperplanes`` /
``offsets`` / ``children`` and a negative child ``c`` denotes leaf ``-c-1``.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .core import (
    DataMatrix,
    InvalidConfigError,
    InvalidInputError,
    RngState,
    as_data_matrix,
    next_below,
    split_range,
    sqdist,
)
from .neighbors import NeighborLists, heap_drain, heap_push

# random draws before falling back to a deterministic scan for a distinct pair
_PAIR_ATTEMPTS = 8


@dataclass(frozen=True)
class FlatTree:
    hyperplanes: np.ndarray  # (n_internal, d) float32 normals
    offsets: np.ndarray  # (n_internal,) float64
    children: np.ndarray  # (n_internal, 2) int32, negative = leaf
    leaf_indptr: np.ndarray  # (n_leaves + 1,) int64
    leaf_members: np.ndarray  # (N,) int32, grouped by leaf
    point_leaf: np.ndarray  # (N,) int32 leaf id of each point

    @property
    def n_leaves(self) -> int:
        return self.leaf_indptr.shape[0] - 1

    @property
    def n_internal(self) -> int:
        return self.offsets.shape[0]

    def leaves(self):
        return [self.leaf_members[self.leaf_indptr[t]:self.leaf_indptr[t + 1]]
                for t in range(self.n_leaves)]

    def leaf_for(self, x) -> int:
        """Descend from the root with a query vector; return its leaf id."""
        return int(_descend(self.hyperplanes, self.offsets, self.children,
                            np.ascontiguousarray(x, dtype=np.float32)))


@dataclass(frozen=True)
class Forest:
    trees: list
    leaf_capacity: int
    n_points: int

    @property
    def n_trees(self) -> int:
        return len(self.trees)


@numba.njit(nogil=True, cache=True)
def _margin(normal, x):
    acc = 0.0
    for k in range(normal.shape[0]):
        acc += np.float64(normal[k]) * np.float64(x[k])
    return acc


@numba.njit(nogil=True, cache=True)
def _descend(hyperplanes, offsets, children, x):
    if offsets.shape[0] == 0:
        return 0
    node = 0
    while True:
        side = 0 if _margin(hyperplanes[node], x) < offsets[node] else 1
        child = children[node, side]
        if child < 0:
            return -child - 1
        node = child


@numba.njit(nogil=True, cache=True)
def _try_split(data, order, lo, hi, a, b, normal, scratch):
    """Partition order[lo:hi] by the bisector of points a and b.

    Returns (n_left, offset); n_left of 0 or hi - lo means the split is
    numerically degenerate and order is left untouched.
    """
    dim = data.shape[1]
    for k in range(dim):
        normal[k] = data[a, k] - data[b, k]
    offset = 0.0
    for k in range(dim):
        mid = 0.5 * (np.float64(data[a, k]) + np.float64(data[b, k]))
        offset += np.float64(normal[k]) * mid
    n_left = 0
    n_right = 0
    m = hi - lo
    for p in range(lo, hi):
        q = order[p]
        if _margin(normal, data[q]) < offset:
            scratch[n_left] = q
            n_left += 1
        else:
            n_right += 1
            scratch[m - n_right] = q
    if n_left == 0 or n_right == 0:
        return n_left, offset
    for p in range(n_left):
        order[lo + p] = scratch[p]
    # right half was filled back-to-front; restore original relative order
    for p in range(n_right):
        order[lo + n_left + p] = scratch[m - 1 - p]
    return n_left, offset


@numba.njit(nogil=True, cache=True)
def _build_tree(data, leaf_capacity, rng):
    n, dim = data.shape
    order = np.arange(n).astype(np.int32)
    scratch = np.empty(n, dtype=np.int32)
    normal = np.empty(dim, dtype=np.float32)

    max_internal = max(n - 1, 1)
    hyperplanes = np.empty((max_internal, dim), dtype=np.float32)
    offsets = np.empty(max_internal, dtype=np.float64)
    children = np.empty((max_internal, 2), dtype=np.int32)
    leaf_lo = np.empty(n, dtype=np.int64)
    leaf_hi = np.empty(n, dtype=np.int64)
    n_internal = 0
    n_leaves = 0

    # stack entries: lo, hi, parent internal node (-1 for root), side
    stack = np.empty((2 * n + 2, 4), dtype=np.int64)
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = n
    stack[0, 2] = -1
    stack[0, 3] = 0
    top = 1
    while top > 0:
        top -= 1
        lo = stack[top, 0]
        hi = stack[top, 1]
        parent = stack[top, 2]
        side = stack[top, 3]
        m = hi - lo
        n_left = 0
        offset = 0.0
        if m > leaf_capacity:
            split = False
            for attempt in range(_PAIR_ATTEMPTS):
                ia = next_below(rng, m)
                ib = next_below(rng, m - 1)
                if ib >= ia:
                    ib += 1
                a = order[lo + ia]
                b = order[lo + ib]
                if sqdist(data[a], data[b]) == 0.0:
                    continue
                n_left, offset = _try_split(data, order, lo, hi, a, b, normal, scratch)
                if 0 < n_left < m:
                    split = True
                    break
            if not split:
                # many duplicates: pair the first member with any distinct one
                a = order[lo]
                for p in range(lo + 1, hi):
                    b = order[p]
                    if sqdist(data[a], data[b]) == 0.0:
                        continue
                    n_left, offset = _try_split(data, order, lo, hi, a, b, normal, scratch)
                    if 0 < n_left < m:
                        split = True
                        break
            if split:
                node = n_internal
                n_internal += 1
                hyperplanes[node, :] = normal
                offsets[node] = offset
                if parent >= 0:
                    children[parent, side] = node
                # push right first so leaves are numbered left to right
                stack[top, 0] = lo + n_left
                stack[top, 1] = hi
                stack[top, 2] = node
                stack[top, 3] = 1
                top += 1
                stack[top, 0] = lo
                stack[top, 1] = lo + n_left
                stack[top, 2] = node
                stack[top, 3] = 0
                top += 1
                continue
        leaf = n_leaves
        n_leaves += 1
        leaf_lo[leaf] = lo
        leaf_hi[leaf] = hi
        if parent >= 0:
            children[parent, side] = -leaf - 1

    leaf_indptr = np.empty(n_leaves + 1, dtype=np.int64)
    leaf_indptr[0] = 0
    point_leaf = np.empty(n, dtype=np.int32)
    for t in range(n_leaves):
        leaf_indptr[t + 1] = leaf_hi[t]
        for p in range(leaf_lo[t], leaf_hi[t]):
            point_leaf[order[p]] = t
    return (hyperplanes[:n_internal].copy(), offsets[:n_internal].copy(),
            children[:n_internal].copy(), leaf_indptr, order, point_leaf)


def build_tree(data: DataMatrix, leaf_capacity: int, rng: RngState) -> FlatTree:
    return FlatTree(*_build_tree(data.values, leaf_capacity, rng.kernel_state()))


def build_forest(data, nt: int, leaf_capacity: int, rng: RngState,
                 workers: int = 1) -> Forest:
    """Build ``nt`` random projection trees over ``data``.

    Tree ``t`` draws from ``rng.fork(t)``, so the forest is identical for
    any worker count and the first ``a`` trees of an ``a + b`` forest equal
    an ``a``-tree forest built from the same state.
    """
    data = as_data_matrix(data)
    if nt < 1:
        raise InvalidConfigError(f"number of trees must be >= 1, got {nt}")
    if leaf_capacity < 1:
        raise InvalidConfigError(f"leaf capacity must be >= 1, got {leaf_capacity}")
    streams = [rng.fork(t) for t in range(nt)]
    if workers <= 1 or nt == 1:
        trees = [build_tree(data, leaf_capacity, s) for s in streams]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(lambda s: build_tree(data, leaf_capacity, s), streams))
    return Forest(trees, int(leaf_capacity), data.n_points)


def candidates_for(forest: Forest, data, p: int) -> set:
    """Union of the leaves holding ``p`` across all trees, minus ``p``."""
    if not 0 <= p < forest.n_points:
        raise InvalidInputError(f"point id {p} out of range")
    out = set()
    for tree in forest.trees:
        leaf = tree.point_leaf[p]
        out.update(tree.leaf_members[tree.leaf_indptr[leaf]:tree.leaf_indptr[leaf + 1]].tolist())
    out.discard(p)
    return out


def _stack_forest(forest: Forest):
    """Concatenate per-tree leaf tables into arrays the kernel can walk."""
    n = forest.n_points
    point_leaf = np.empty((forest.n_trees, n), dtype=np.int64)
    indptrs = []
    base = 0
    shift = 0
    for t, tree in enumerate(forest.trees):
        point_leaf[t] = tree.point_leaf.astype(np.int64) + base
        indptrs.append(tree.leaf_indptr[:-1] + shift)
        base += tree.n_leaves
        shift += n
    indptrs.append(np.array([shift], dtype=np.int64))
    members = np.concatenate([tree.leaf_members for tree in forest.trees])
    return point_leaf, np.concatenate(indptrs), members


@numba.njit(nogil=True, cache=True)
def _forest_knn_block(data, point_leaf, indptr, members, lo, hi, out_i, out_d):
    n = data.shape[0]
    k = out_i.shape[1]
    mark = np.zeros(n, dtype=np.int64)
    heap_d = np.empty(k, dtype=np.float64)
    heap_i = np.empty(k, dtype=np.int32)
    for i in range(lo, hi):
        stamp = i + 1
        mark[i] = stamp
        size = 0
        for t in range(point_leaf.shape[0]):
            leaf = point_leaf[t, i]
            for p in range(indptr[leaf], indptr[leaf + 1]):
                j = members[p]
                if mark[j] == stamp:
                    continue
                mark[j] = stamp
                size = heap_push(heap_d, heap_i, size, sqdist(data[i], data[j]), j)
        heap_drain(heap_d, heap_i, size, out_d[i], out_i[i])


def run_blocks(kernel, n: int, workers: int, *args):
    """Run ``kernel(*args, lo, hi, ...)`` over disjoint point ranges."""
    blocks = split_range(n, max(1, workers))
    if len(blocks) == 1:
        kernel(*args, *blocks[0])
        return
    with ThreadPoolExecutor(max_workers=len(blocks)) as pool:
        for fut in [pool.submit(kernel, *args, lo, hi) for lo, hi in blocks]:
            fut.result()


def knn_from_forest(forest: Forest, data, k: int, workers: int = 1) -> NeighborLists:
    """For each point keep the ``k`` closest leaf co-members across trees."""
    data = as_data_matrix(data)
    if k < 1:
        raise InvalidConfigError(f"k must be >= 1, got {k}")
    point_leaf, indptr, members = _stack_forest(forest)
    out = NeighborLists.empty(data.n_points, k)

    def kernel(lo, hi):
        _forest_knn_block(data.values, point_leaf, indptr, members, lo, hi,
                          out.indices, out.distances)

    run_blocks(kernel, data.n_points, workers)
    return out
