"""O(1) discrete samplers: edges by weight, negatives by degree^0.75."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .core import InvalidInputError, RngState, next_below, next_uniform

NOISE_EXPONENT = 0.75
NEGATIVE_REDRAWS = 100


@numba.njit(nogil=True, cache=True)
def _build_alias(weights, prob, alias):
    n = weights.shape[0]
    total = 0.0
    for k in range(n):
        total += weights[k]
    small = np.empty(n, dtype=np.int64)
    large = np.empty(n, dtype=np.int64)
    ns = 0
    nl = 0
    scaled = np.empty(n, dtype=np.float64)
    for k in range(n):
        scaled[k] = weights[k] * n / total
        alias[k] = k
        if scaled[k] < 1.0:
            small[ns] = k
            ns += 1
        else:
            large[nl] = k
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        g = large[nl - 1]
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            nl -= 1
            small[ns] = g
            ns += 1
    for p in range(nl):
        prob[large[p]] = 1.0
    for p in range(ns):
        # only reachable through rounding; the residual mass is ~1 ulp
        prob[small[p]] = 1.0


@numba.njit(nogil=True, cache=True)
def alias_draw(prob, alias, state):
    k = next_below(state, prob.shape[0])
    if next_uniform(state) < prob[k]:
        return k
    return alias[k]


@numba.njit(nogil=True, cache=True)
def _draw_many(prob, alias, state, out):
    for t in range(out.shape[0]):
        out[t] = alias_draw(prob, alias, state)


@numba.njit(nogil=True, cache=True)
def negative_draw(prob, alias, state, exclude_a, exclude_b):
    """Draw from the noise table, rejecting two excluded vertices.

    After ``NEGATIVE_REDRAWS`` rejections, scans linearly from a random
    offset for any admissible vertex; returns -1 if none exists.
    """
    for _ in range(NEGATIVE_REDRAWS):
        k = alias_draw(prob, alias, state)
        if k != exclude_a and k != exclude_b:
            return k
    n = prob.shape[0]
    start = next_below(state, n)
    for step in range(n):
        k = (start + step) % n
        if k == exclude_a or k == exclude_b:
            continue
        # a vertex is reachable iff it keeps some of its own column or is aliased to
        if prob[k] > 0.0:
            return k
        for q in range(n):
            if alias[q] == k and prob[q] < 1.0:
                return k
    return -1


@numba.njit(nogil=True, cache=True)
def _negatives_many(prob, alias, state, exclude_a, exclude_b, out):
    for t in range(out.shape[0]):
        out[t] = negative_draw(prob, alias, state, exclude_a, exclude_b)


@dataclass(frozen=True)
class AliasTable:
    prob: np.ndarray
    alias: np.ndarray

    @property
    def n(self) -> int:
        return self.prob.shape[0]

    def stationary(self) -> np.ndarray:
        """Exact per-index draw probability implied by the table."""
        out = self.prob.astype(np.float64).copy()
        np.add.at(out, self.alias, 1.0 - self.prob)
        return out / self.n

    def draw(self, rng: RngState, size: int) -> np.ndarray:
        out = np.empty(size, dtype=np.int64)
        _draw_many(self.prob, self.alias, rng.kernel_state(), out)
        return out


def build_alias(weights) -> AliasTable:
    """Walker/Vose alias table over non-negative ``weights``."""
    w = np.ascontiguousarray(weights, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] == 0:
        raise InvalidInputError("weights must be a non-empty vector")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise InvalidInputError("weights must be finite and non-negative")
    if not np.any(w > 0):
        raise InvalidInputError("at least one weight must be positive")
    prob = np.zeros(w.shape[0], dtype=np.float64)
    alias = np.empty(w.shape[0], dtype=np.int64)
    _build_alias(w, prob, alias)
    return AliasTable(prob, alias)


@dataclass(frozen=True)
class EdgeSampler:
    """Alias table over the directed edges of a weighted graph."""

    table: AliasTable
    sources: np.ndarray
    targets: np.ndarray

    @classmethod
    def from_graph(cls, graph) -> "EdgeSampler":
        return cls(build_alias(graph.weights), graph.sources(), graph.indices)

    def edge(self, e: int):
        return int(self.sources[e]), int(self.targets[e])


def sample_edge(table: AliasTable, rng) -> int:
    """One edge index drawn proportionally to weight.

    ``rng`` is either an :class:`RngState` (fresh stream) or a kernel state
    array that advances in place.
    """
    state = rng.kernel_state() if isinstance(rng, RngState) else rng
    return int(alias_draw(table.prob, table.alias, state))


@dataclass(frozen=True)
class NoiseDistribution:
    """Vertices weighted by ``degree ** 0.75``; isolated vertices get zero."""

    table: AliasTable
    weights: np.ndarray

    @classmethod
    def from_degrees(cls, degrees, exponent: float = NOISE_EXPONENT) -> "NoiseDistribution":
        d = np.asarray(degrees, dtype=np.float64)
        w = np.where(d > 0, d, 0.0) ** exponent
        return cls(build_alias(w), w)

    @classmethod
    def from_graph(cls, graph) -> "NoiseDistribution":
        return cls.from_degrees(graph.noise_degree)

    def probabilities(self, exclude=()) -> np.ndarray:
        w = self.weights.copy()
        for v in exclude:
            if v >= 0:
                w[v] = 0.0
        total = w.sum()
        return w / total if total > 0 else w

    def draw(self, rng: RngState, size: int, exclude: int = -1, target: int = -1) -> np.ndarray:
        out = np.empty(size, dtype=np.int64)
        _negatives_many(self.table.prob, self.table.alias, rng.kernel_state(),
                        exclude, target, out)
        return out


def sample_negative(noise: NoiseDistribution, rng, exclude: int, target: int = -1) -> int:
    """One negative vertex, never equal to ``exclude`` or ``target``."""
    state = rng.kernel_state() if isinstance(rng, RngState) else rng
    return int(negative_draw(noise.table.prob, noise.table.alias, state, exclude, target))
