"""Exact KNN oracle, graph recall, and leave-one-out KNN classification."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numba
import numpy as np
from scipy.spatial import cKDTree

from .core import InvalidInputError, as_data_matrix, sqdist
from .neighbors import NeighborLists

BRUTE_FORCE_LIMIT = 100_000


@dataclass(frozen=True)
class RecallReport:
    per_point: np.ndarray
    k: int
    n: int

    @property
    def mean(self) -> float:
        return float(self.per_point.mean())


@dataclass(frozen=True)
class LabeledSet:
    """Dense integer labels plus the original tokens, in id order."""

    ids: np.ndarray
    names: tuple

    def __post_init__(self):
        ids = np.asarray(self.ids, dtype=np.int64)
        if ids.ndim != 1:
            raise InvalidInputError("labels must be one-dimensional")
        if ids.size and (ids.min() < 0 or ids.max() >= len(self.names)):
            raise InvalidInputError("label ids must index into names")
        object.__setattr__(self, "ids", ids)

    @classmethod
    def from_tokens(cls, tokens) -> "LabeledSet":
        mapping = {}
        ids = [mapping.setdefault(t, len(mapping)) for t in tokens]
        return cls(np.array(ids, dtype=np.int64), tuple(mapping))

    @property
    def n(self) -> int:
        return self.ids.shape[0]

    @property
    def n_classes(self) -> int:
        return len(self.names)

    def token(self, i: int) -> str:
        return str(self.names[self.ids[i]])


@numba.njit(nogil=True, cache=True)
def _exact_to(data, i, cand, out):
    for p in range(cand.shape[0]):
        out[p] = sqdist(data[i], data[cand[p]])


def brute_force_knn(data, k: int, block: int = 256) -> NeighborLists:
    """Exact K nearest neighbors, ties broken toward the smaller id.

    Candidates are screened with a float64 Gram-matrix expansion and a
    conservative slack, then ranked with the same squared-distance kernel
    the approximate graph uses, so stored distances match bit for bit.
    """
    data = as_data_matrix(data)
    n = data.n_points
    if k >= n:
        raise InvalidInputError(f"k={k} must be smaller than the number of points {n}")
    if k < 1:
        raise InvalidInputError("k must be >= 1")
    if n > BRUTE_FORCE_LIMIT:
        warnings.warn(f"exact KNN on {n} points is quadratic and may be slow",
                      RuntimeWarning, stacklevel=2)
    x = data.values.astype(np.float64)
    sq = np.einsum("ij,ij->i", x, x)
    slack_base = 1e-9 * (sq.max() + 1.0)
    out = NeighborLists.empty(n, k)
    buf = np.empty(n, dtype=np.float64)
    for lo in range(0, n, block):
        hi = min(n, lo + block)
        approx = sq[lo:hi, None] + sq[None, :] - 2.0 * (x[lo:hi] @ x.T)
        approx[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        kth = np.partition(approx, k - 1, axis=1)[:, k - 1]
        for r in range(hi - lo):
            i = lo + r
            cand = np.flatnonzero(approx[r] <= kth[r] + slack_base + 1e-9 * sq[i])
            d = buf[:cand.shape[0]]
            _exact_to(data.values, i, cand.astype(np.int64), d)
            order = np.lexsort((cand, d))[:k]
            out.indices[i] = cand[order]
            out.distances[i] = d[order]
    return out


@numba.njit(cache=True)
def _overlap(a, b, out):
    for i in range(a.shape[0]):
        c = 0
        for p in range(a.shape[1]):
            x = a[i, p]
            if x < 0:
                break
            for q in range(b.shape[1]):
                if b[i, q] == x:
                    c += 1
                    break
        out[i] = c


def recall(approx: NeighborLists, exact: NeighborLists) -> RecallReport:
    """Fraction of each point's exact neighbors present in ``approx``."""
    if approx.indices.shape != exact.indices.shape:
        raise InvalidInputError(
            f"shape mismatch: {approx.indices.shape} vs {exact.indices.shape}")
    hits = np.empty(approx.n_points, dtype=np.int64)
    _overlap(approx.indices, exact.indices, hits)
    return RecallReport(hits / exact.k, exact.k, exact.n_points)


def knn_classify_accuracy(embedding, labels, k: int = 5) -> float:
    """Leave-one-out majority vote among the ``k`` nearest embedded points.

    Vote ties go to the smallest label id.
    """
    coords = np.asarray(getattr(embedding, "coords", embedding), dtype=np.float64)
    ids = labels.ids if isinstance(labels, LabeledSet) else np.asarray(labels, dtype=np.int64)
    n = coords.shape[0]
    if ids.shape[0] != n:
        raise InvalidInputError(f"{ids.shape[0]} labels for {n} points")
    if not 1 <= k < n:
        raise InvalidInputError(f"k must be in [1, n), got {k}")
    _, nbrs = cKDTree(coords).query(coords, k=k + 1)
    nbrs = np.atleast_2d(nbrs)
    n_classes = int(ids.max()) + 1
    correct = 0
    for i in range(n):
        row = nbrs[i]
        hit = np.flatnonzero(row == i)
        row = np.delete(row, hit[0]) if hit.size else row[:k]
        votes = np.bincount(ids[row], minlength=n_classes)
        correct += int(np.argmax(votes) == ids[i])
    return correct / n


def metrics_json(mean_recall, knn_accuracy, k: int, n: int) -> str:
    """Single-line metrics record; missing metrics are ``null``."""
    return json.dumps({
        "mean_recall": None if mean_recall is None else float(mean_recall),
        "knn_accuracy": None if knn_accuracy is None else float(knn_accuracy),
        "k": int(k),
        "n": int(n),
    })
