"""Bounded neighbor lists and the max-heap kernels that fill them.

Heaps are keyed lexicographically on ``(squared distance, point id)`` so
that equal distances always resolve toward the smaller id.  Every producer
of neighbor lists (forest search, exploring, the exact oracle) goes through
the same comparison, which makes their outputs directly comparable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .core import InvalidInputError, sqdist


@numba.njit(nogil=True, cache=True, inline="always")
def _greater(d1, i1, d2, i2):
    return d1 > d2 or (d1 == d2 and i1 > i2)


@numba.njit(nogil=True, cache=True)
def heap_push(heap_d, heap_i, size, d, idx):
    """Offer ``(d, idx)`` to a bounded max-heap; return the new size."""
    cap = heap_d.shape[0]
    if size < cap:
        pos = size
        heap_d[pos] = d
        heap_i[pos] = idx
        while pos > 0:
            parent = (pos - 1) >> 1
            if _greater(heap_d[pos], heap_i[pos], heap_d[parent], heap_i[parent]):
                heap_d[pos], heap_d[parent] = heap_d[parent], heap_d[pos]
                heap_i[pos], heap_i[parent] = heap_i[parent], heap_i[pos]
                pos = parent
            else:
                break
        return size + 1
    if cap == 0 or not _greater(heap_d[0], heap_i[0], d, idx):
        return size
    heap_d[0] = d
    heap_i[0] = idx
    _sift_down(heap_d, heap_i, 0, size)
    return size


@numba.njit(nogil=True, cache=True)
def _sift_down(heap_d, heap_i, pos, size):
    while True:
        left = 2 * pos + 1
        if left >= size:
            break
        big = left
        right = left + 1
        if right < size and _greater(heap_d[right], heap_i[right], heap_d[left], heap_i[left]):
            big = right
        if _greater(heap_d[big], heap_i[big], heap_d[pos], heap_i[pos]):
            heap_d[pos], heap_d[big] = heap_d[big], heap_d[pos]
            heap_i[pos], heap_i[big] = heap_i[big], heap_i[pos]
            pos = big
        else:
            break


@numba.njit(nogil=True, cache=True)
def heap_drain(heap_d, heap_i, size, out_d, out_i):
    """Write heap contents ascending into ``out_*``, padding with (inf, -1)."""
    for p in range(size, out_d.shape[0]):
        out_d[p] = np.inf
        out_i[p] = -1
    n = size
    while n > 0:
        out_d[n - 1] = heap_d[0]
        out_i[n - 1] = heap_i[0]
        n -= 1
        heap_d[0] = heap_d[n]
        heap_i[0] = heap_i[n]
        _sift_down(heap_d, heap_i, 0, n)


@numba.njit(nogil=True, cache=True)
def _recompute_ok(data, indices, distances):
    for i in range(indices.shape[0]):
        for p in range(indices.shape[1]):
            j = indices[i, p]
            if j < 0:
                break
            if sqdist(data[i], data[j]) != distances[i, p]:
                return False
    return True


@dataclass
class NeighborLists:
    """Per-point neighbor ids and squared distances, capacity ``k``.

    ``indices`` is an ``(N, k)`` int32 array padded with ``-1`` and
    ``distances`` the matching float64 array padded with ``inf``.  Rows are
    sorted ascending by ``(distance, id)``.
    """

    indices: np.ndarray
    distances: np.ndarray

    def __post_init__(self):
        self.indices = np.ascontiguousarray(self.indices, dtype=np.int32)
        self.distances = np.ascontiguousarray(self.distances, dtype=np.float64)
        if self.indices.shape != self.distances.shape or self.indices.ndim != 2:
            raise InvalidInputError("indices and distances must be equal-shape 2-d arrays")

    @classmethod
    def empty(cls, n: int, k: int) -> "NeighborLists":
        return cls(np.full((n, k), -1, np.int32), np.full((n, k), np.inf))

    @property
    def n_points(self) -> int:
        return self.indices.shape[0]

    @property
    def k(self) -> int:
        return self.indices.shape[1]

    def lengths(self) -> np.ndarray:
        return (self.indices >= 0).sum(axis=1)

    def neighbors(self, i: int):
        row = self.indices[i]
        m = int((row >= 0).sum())
        return row[:m].copy(), self.distances[i, :m].copy()

    def truncate(self, k: int) -> "NeighborLists":
        """The ``k`` nearest entries of every row (rows are already sorted)."""
        if not 1 <= k <= self.k:
            raise InvalidInputError(f"k must be in [1, {self.k}], got {k}")
        return NeighborLists(self.indices[:, :k].copy(), self.distances[:, :k].copy())

    def copy(self) -> "NeighborLists":
        return NeighborLists(self.indices.copy(), self.distances.copy())

    def __eq__(self, other):
        if not isinstance(other, NeighborLists):
            return NotImplemented
        return (np.array_equal(self.indices, other.indices)
                and np.array_equal(self.distances, other.distances))

    def validate(self, data=None):
        """Raise ``AssertionError`` if any structural invariant is broken."""
        n, k = self.indices.shape
        for i in range(n):
            ids, d = self.neighbors(i)
            assert np.all(self.indices[i, len(ids):] == -1), f"row {i}: gap in list"
            assert i not in ids, f"row {i}: self loop"
            assert len(set(ids.tolist())) == len(ids), f"row {i}: duplicate id"
            assert np.all((ids >= 0) & (ids < n)), f"row {i}: id out of range"
            keys = list(zip(d.tolist(), ids.tolist()))
            assert keys == sorted(keys), f"row {i}: not sorted"
        if data is not None:
            values = np.ascontiguousarray(getattr(data, "values", data), dtype=np.float32)
            assert _recompute_ok(values, self.indices, self.distances), "stored distance mismatch"

    def to_text(self) -> str:
        """Debug dump: ``id k (neighbor,dist2)...`` per line."""
        lines = []
        for i in range(self.n_points):
            ids, d = self.neighbors(i)
            pairs = " ".join(f"({j},{v:.9g})" for j, v in zip(ids.tolist(), d.tolist()))
            lines.append(f"{i} {len(ids)} {pairs}".rstrip())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str, k: int | None = None) -> "NeighborLists":
        rows = []
        for line in text.strip().splitlines():
            head, _, rest = line.partition(" ")
            count, _, rest = rest.partition(" ")
            pairs = []
            for token in rest.split():
                j, v = token.strip("()").split(",")
                pairs.append((int(j), float(v)))
            if len(pairs) != int(count):
                raise InvalidInputError(f"row {head}: count {count} != {len(pairs)} pairs")
            rows.append(pairs)
        if k is None:
            k = max((len(r) for r in rows), default=0)
        out = cls.empty(len(rows), k)
        for i, pairs in enumerate(rows):
            for p, (j, v) in enumerate(pairs):
                out.indices[i, p] = j
                out.distances[i, p] = v
        return out
