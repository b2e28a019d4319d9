"""Perplexity-calibrated Gaussian affinities and their symmetrization.

For each point the bandwidth of a Gaussian kernel over its neighbor list is
tuned so that the conditional distribution reaches a target perplexity;
the directed affinities are then averaged with their reverse and scaled by
``1 / (2N)``, giving a symmetric weight matrix whose entries sum to one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np
import scipy.sparse as sp

from .core import InvalidInputError
from .neighbors import NeighborLists

SIGMA2_LO = 1e-20
SIGMA2_HI = 1e20
MAX_HALVINGS = 100
PERPLEXITY_TOL = 1e-3
# relative weight below which symmetrized edges are dropped (times 1/N)
MIN_WEIGHT = 1e-12

_UNIFORM = 0
_CONVERGED = 1
_SATURATED = 2


class Calibration(NamedTuple):
    sigma: float
    probs: np.ndarray
    perplexity: float
    converged: bool


@numba.njit(nogil=True, cache=True)
def _probs_at(shifted, beta, out):
    """Fill ``out`` with normalized exp(-beta * shifted); return entropy in bits."""
    total = 0.0
    for p in range(shifted.shape[0]):
        e = math.exp(-beta * shifted[p])
        out[p] = e
        total += e
    h = 0.0
    for p in range(shifted.shape[0]):
        q = out[p] / total
        out[p] = q
        if q > 0.0:
            h -= q * math.log2(q)
    return h


@numba.njit(nogil=True, cache=True)
def _calibrate(dists2, target, out):
    """Bisect log(sigma^2) until the perplexity matches ``target``.

    Returns (sigma, status).  The bisection runs to float resolution rather
    than stopping at the first bracket within tolerance, so rescaling the
    inputs rescales sigma exactly and leaves the probabilities unchanged.
    """
    m = dists2.shape[0]
    dmin = dists2[0]
    dmax = dists2[0]
    for p in range(m):
        if dists2[p] < dmin:
            dmin = dists2[p]
        if dists2[p] > dmax:
            dmax = dists2[p]
    if dmax == dmin:
        # every distance equal: any bandwidth yields the uniform distribution
        for p in range(m):
            out[p] = 1.0 / m
        return 1.0, _UNIFORM
    shifted = np.empty(m, dtype=np.float64)
    for p in range(m):
        shifted[p] = dists2[p] - dmin
    log_target = math.log2(target)
    lo = math.log(SIGMA2_LO)
    hi = math.log(SIGMA2_HI)
    mid = 0.5 * (lo + hi)
    h = 0.0
    for _ in range(MAX_HALVINGS):
        mid = 0.5 * (lo + hi)
        h = _probs_at(shifted, 0.5 * math.exp(-mid), out)
        if h == log_target:
            break
        if h < log_target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, abs(mid)):
            break
    status = _CONVERGED
    if abs(2.0 ** h - target) >= PERPLEXITY_TOL:
        status = _SATURATED
    return math.sqrt(math.exp(mid)), status


def calibrate_sigma(dists2, u: float) -> Calibration:
    """Find the kernel width whose neighbor distribution has perplexity ``u``.

    ``dists2`` are squared distances to the neighbors of one point.  When
    the target cannot be reached (``u`` at or above the list length, or
    below the floor set by tied nearest distances) the search clamps at its
    bounds and ``converged`` is False.
    """
    d = np.asarray(dists2, dtype=np.float64)
    if d.ndim != 1 or d.shape[0] == 0:
        raise InvalidInputError("distance list must be non-empty")
    if not np.all(np.isfinite(d)) or np.any(d < 0):
        raise InvalidInputError("distances must be finite and non-negative")
    if not u > 1.0:
        raise InvalidInputError(f"perplexity must be > 1, got {u}")
    probs = np.empty_like(d)
    m = d.shape[0]
    if u >= m:
        probs[:] = 1.0 / m
        return Calibration(math.sqrt(SIGMA2_HI), probs, float(m), u - m < PERPLEXITY_TOL)
    sigma, status = _calibrate(d, float(u), probs)
    perp = _perplexity(probs)
    converged = status == _CONVERGED or (status == _UNIFORM and perp == u)
    return Calibration(sigma, probs, perp, converged)


def _perplexity(probs) -> float:
    p = probs[probs > 0]
    return float(2.0 ** (-(p * np.log2(p)).sum()))


@numba.njit(nogil=True, cache=True)
def _calibrate_rows(indices, distances, target, probs, sigmas, status):
    for i in range(indices.shape[0]):
        m = 0
        while m < indices.shape[1] and indices[i, m] >= 0:
            m += 1
        if m == 0:
            sigmas[i] = 1.0
            status[i] = _UNIFORM
            continue
        if target >= m:
            for p in range(m):
                probs[i, p] = 1.0 / m
            sigmas[i] = math.sqrt(SIGMA2_HI)
            status[i] = _UNIFORM if target - m < PERPLEXITY_TOL else _SATURATED
            continue
        sigmas[i], status[i] = _calibrate(distances[i, :m], target, probs[i, :m])


@dataclass
class WeightedGraph:
    """Symmetric weighted graph in CSR form.

    Each undirected edge appears twice (``i -> j`` and ``j -> i``) with the
    same stored weight.  ``noise_degree[j]`` is the weighted degree of ``j``.
    """

    n_vertices: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    noise_degree: np.ndarray

    @classmethod
    def from_matrix(cls, matrix) -> "WeightedGraph":
        c = sp.coo_matrix(matrix, dtype=np.float64)
        c.sum_duplicates()
        keep = (c.row != c.col) & (c.data != 0.0)
        m = sp.csr_matrix((c.data[keep], (c.row[keep], c.col[keep])), shape=c.shape)
        m.sort_indices()
        return cls(m.shape[0], m.indptr.astype(np.int64), m.indices.astype(np.int32),
                   m.data.copy(), np.asarray(m.sum(axis=1)).ravel())

    @classmethod
    def from_edges(cls, n: int, edges) -> "WeightedGraph":
        """Build from undirected ``(i, j, w)`` triples; each is mirrored."""
        edges = list(edges)
        rows = [i for i, j, w in edges] + [j for i, j, w in edges]
        cols = [j for i, j, w in edges] + [i for i, j, w in edges]
        vals = [w for _, _, w in edges] * 2
        return cls.from_matrix(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)))

    @property
    def n_edges(self) -> int:
        """Number of directed (ordered) edges."""
        return self.indices.shape[0]

    def sources(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_vertices, dtype=np.int32), np.diff(self.indptr))

    def to_matrix(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.weights, self.indices, self.indptr),
                             shape=(self.n_vertices, self.n_vertices))

    def weight(self, i: int, j: int) -> float:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        pos = np.searchsorted(self.indices[lo:hi], j)
        if pos < hi - lo and self.indices[lo + pos] == j:
            return float(self.weights[lo + pos])
        return 0.0

    def edges(self):
        """Iterate directed ``(i, j, w)`` triples."""
        src = self.sources()
        return zip(src.tolist(), self.indices.tolist(), self.weights.tolist())

    def to_text(self) -> str:
        """``i j w`` per directed edge, weights to 9 significant digits."""
        return "".join(f"{i} {j} {w:.9g}\n" for i, j, w in self.edges())

    @classmethod
    def from_text(cls, text: str, n: int | None = None) -> "WeightedGraph":
        rows, cols, vals = [], [], []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3:
                raise InvalidInputError(f"line {lineno}: expected 'i j w'")
            rows.append(int(parts[0]))
            cols.append(int(parts[1]))
            vals.append(float(parts[2]))
        if n is None:
            n = max(max(rows, default=-1), max(cols, default=-1)) + 1
        return cls.from_matrix(sp.coo_matrix((vals, (rows, cols)), shape=(n, n)))


@dataclass
class DirectedAffinities:
    """Row-stochastic conditional probabilities over the KNN lists."""

    indices: np.ndarray
    probs: np.ndarray
    sigmas: np.ndarray
    saturated: np.ndarray


def conditional_probabilities(knn: NeighborLists, u: float) -> DirectedAffinities:
    if not u > 1.0:
        raise InvalidInputError(f"perplexity must be > 1, got {u}")
    n, k = knn.indices.shape
    probs = np.zeros((n, k), dtype=np.float64)
    sigmas = np.empty(n, dtype=np.float64)
    status = np.empty(n, dtype=np.int64)
    _calibrate_rows(knn.indices, knn.distances, float(u), probs, sigmas, status)
    saturated = status == _SATURATED
    if saturated.any():
        warnings.warn(
            f"perplexity {u} unreachable for {int(saturated.sum())} of {n} points "
            f"(neighbor lists of length {k}); bandwidth clamped",
            RuntimeWarning, stacklevel=3)
    return DirectedAffinities(knn.indices, probs, sigmas, saturated)


def weigh_graph(data, knn: NeighborLists, u: float) -> WeightedGraph:
    """Symmetric weights ``(p_j|i + p_i|j) / 2N`` over the KNN edges.

    A missing reverse edge contributes zero.  Edges lighter than
    ``MIN_WEIGHT / N`` are dropped.
    """
    n = knn.n_points
    if data is not None and len(data) != n:
        raise InvalidInputError(f"{len(data)} points but {n} neighbor lists")
    aff = conditional_probabilities(knn, u)
    mask = aff.indices >= 0
    rows = np.broadcast_to(np.arange(n)[:, None], mask.shape)[mask]
    p = sp.csr_matrix((aff.probs[mask], (rows, aff.indices[mask])), shape=(n, n))
    w = (p + p.T).tocsr()
    w.data /= 2.0 * n
    w.data[w.data < MIN_WEIGHT / n] = 0.0
    return WeightedGraph.from_matrix(w)
