"""Graph layout by negative-sampled likelihood maximization.

The probability of an edge between two embedded points is a decreasing
function ``f`` of their distance.  Training draws edges proportionally to
weight, pulls the endpoints together along the gradient of ``log f`` and
pushes the source away from ``M`` noise vertices along the gradient of
``gamma * log(1 - f)``.  Multiple workers update one shared coordinate array
without locks; with a single worker the run is bit-reproducible.

The ``epsilon`` guard replaces ``d^2`` by ``d^2 + epsilon`` in the
inverse-quadratic repulsion.  The matching guarded objective term is
``gamma * log(a (d^2 + eps) / (1 + a d^2)) / (1 - a eps)``, whose gradient is
exactly the guarded update and which equals ``gamma * log(1 - f)`` at
``eps = 0``.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numba
import numpy as np

from .core import InvalidConfigError, InvalidInputError, RngState
from .sampler import EdgeSampler, NoiseDistribution, alias_draw, negative_draw

INVQ = 0
SIGMOID = 1
_KINDS = {"invq": INVQ, "sigmoid": SIGMOID}

DEFAULT_CLIP = 5.0
INIT_SCALE = 1e3


@dataclass(frozen=True)
class LinkFunction:
    """``invq``: f(x) = 1 / (1 + a x^2); ``sigmoid``: f(x) = 1 / (1 + exp(x^2))."""

    kind: str = "invq"
    a: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidConfigError(f"unknown link function {self.kind!r}")
        if not self.a > 0:
            raise InvalidConfigError("a must be positive")

    @property
    def code(self) -> int:
        return _KINDS[self.kind]

    def __call__(self, x):
        d2 = np.square(np.asarray(x, dtype=np.float64))
        if self.code == INVQ:
            return 1.0 / (1.0 + self.a * d2)
        return 0.5 * (1.0 - np.tanh(0.5 * d2))


@dataclass(frozen=True)
class LayoutConfig:
    dim: int = 2
    link: LinkFunction = field(default_factory=LinkFunction)
    negatives: int = 5
    gamma: float = 7.0
    samples_per_node: int = 10_000
    total_samples: Optional[int] = None
    rate: float = 1.0
    workers: int = 1
    clip: float = DEFAULT_CLIP
    epsilon: float = 0.1
    seed: int = 0
    trace_bins: int = 100

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidConfigError("dim must be >= 1")
        if self.negatives < 0:
            raise InvalidConfigError("negatives must be >= 0")
        if not self.gamma > 0:
            raise InvalidConfigError("gamma must be positive")
        if not self.rate > 0:
            raise InvalidConfigError("rate must be positive")
        if self.workers < 1:
            raise InvalidConfigError("workers must be >= 1")
        if not self.clip > 0:
            raise InvalidConfigError("clip must be positive")
        if self.epsilon < 0:
            raise InvalidConfigError("epsilon must be >= 0")
        if self.link.code == INVQ and self.link.a * self.epsilon >= 1.0:
            raise InvalidConfigError("epsilon guard requires a * epsilon < 1")
        if self.total_samples is not None and self.total_samples < 1:
            raise InvalidConfigError("total_samples must be >= 1")
        if self.total_samples is None and self.samples_per_node < 1:
            raise InvalidConfigError("samples_per_node must be >= 1")

    def n_samples(self, n_vertices: int) -> int:
        if self.total_samples is not None:
            return int(self.total_samples)
        return int(self.samples_per_node) * int(n_vertices)


@dataclass
class Embedding:
    coords: np.ndarray
    trace: Optional[np.ndarray] = None

    def __post_init__(self):
        self.coords = np.ascontiguousarray(self.coords, dtype=np.float32)
        if self.coords.ndim != 2:
            raise InvalidInputError("coordinates must be an (N, s) matrix")

    @property
    def n_points(self) -> int:
        return self.coords.shape[0]

    @property
    def s(self) -> int:
        return self.coords.shape[1]


# ---------------------------------------------------------------------------
# scalar kernels, all in terms of the squared distance d2
# ---------------------------------------------------------------------------


@numba.njit(nogil=True, cache=True)
def _softplus(x):
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@numba.njit(nogil=True, cache=True)
def log_f(kind, a, d2):
    if kind == INVQ:
        return -math.log1p(a * d2)
    return -_softplus(d2)


@numba.njit(nogil=True, cache=True)
def log_one_minus_f(kind, a, d2, eps):
    if kind == INVQ:
        x = a * (d2 + eps)
        if x == 0.0:
            return -np.inf
        return (math.log(x) - math.log1p(a * d2)) / (1.0 - a * eps)
    return -_softplus(-d2)


@numba.njit(nogil=True, cache=True)
def positive_coef(kind, a, d2):
    """d log f / d y_i = coef * (y_i - y_j)."""
    if kind == INVQ:
        return -2.0 * a / (1.0 + a * d2)
    return -2.0 / (1.0 + math.exp(-d2))


@numba.njit(nogil=True, cache=True)
def negative_coef(kind, a, gamma, d2, eps):
    """d [gamma log(1 - f)] / d y_i = coef * (y_i - y_k)."""
    if kind == INVQ:
        return 2.0 * gamma / ((d2 + eps) * (1.0 + a * d2))
    if d2 > 700.0:
        return 0.0
    return 2.0 * gamma / (1.0 + math.exp(d2))


@numba.njit(nogil=True, cache=True)
def learning_rate(rho0, t, n_samples):
    """Linear decay from ``rho0`` at t=0 to ``rho0 / n_samples`` at the last sample."""
    return rho0 * (1.0 - t / n_samples)


@numba.njit(nogil=True, cache=True, inline="always")
def _clip(x, c):
    if x > c:
        return c
    if x < -c:
        return -c
    return x


@numba.njit(nogil=True, cache=True)
def _sgd(Y, src, dst, eprob, ealias, nprob, nalias, kind, a, gamma, n_neg,
         rho0, clip, eps, n_samples, state, trace_sum, trace_cnt):
    s = Y.shape[1]
    acc = np.zeros(s, dtype=np.float64)
    diff = np.zeros(s, dtype=np.float64)
    n_bins = trace_sum.shape[0]
    obj = 0.0
    for t in range(n_samples):
        rate = learning_rate(rho0, t, n_samples)
        e = alias_draw(eprob, ealias, state)
        i = src[e]
        j = dst[e]
        d2 = 0.0
        for c in range(s):
            diff[c] = np.float64(Y[i, c]) - np.float64(Y[j, c])
            d2 += diff[c] * diff[c]
        if n_bins > 0:
            obj = log_f(kind, a, d2)
        coef = positive_coef(kind, a, d2)
        for c in range(s):
            g = _clip(coef * diff[c], clip)
            acc[c] = g
            Y[j, c] = Y[j, c] - rate * g
        for m in range(n_neg):
            k = negative_draw(nprob, nalias, state, i, j)
            if k < 0:
                break
            d2 = 0.0
            for c in range(s):
                diff[c] = np.float64(Y[i, c]) - np.float64(Y[k, c])
                d2 += diff[c] * diff[c]
            if n_bins > 0:
                obj += gamma * log_one_minus_f(kind, a, d2, eps)
            coef = negative_coef(kind, a, gamma, d2, eps)
            for c in range(s):
                g = _clip(coef * diff[c], clip)
                acc[c] += g
                Y[k, c] = Y[k, c] - rate * g
        for c in range(s):
            Y[i, c] = Y[i, c] + rate * _clip(acc[c], clip)
        if n_bins > 0:
            b = (t * n_bins) // n_samples
            trace_sum[b] += obj
            trace_cnt[b] += 1


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def _diff_d2(yi, yj):
    yi = np.asarray(yi, dtype=np.float64)
    yj = np.asarray(yj, dtype=np.float64)
    if yi.shape != yj.shape:
        raise InvalidInputError(f"dimension mismatch: {yi.shape} vs {yj.shape}")
    diff = yi - yj
    return diff, float(diff @ diff)


def edge_probability(link: LinkFunction, yi, yj) -> float:
    _, d2 = _diff_d2(yi, yj)
    return float(math.exp(log_f(link.code, link.a, d2)))


def positive_gradient(link: LinkFunction, yi, yj, clip: float = DEFAULT_CLIP):
    """Gradients of ``log f(|yi - yj|)`` w.r.t. ``yi`` and ``yj``."""
    diff, d2 = _diff_d2(yi, yj)
    gi = np.clip(positive_coef(link.code, link.a, d2) * diff, -clip, clip)
    return gi, -gi


def negative_gradient(link: LinkFunction, yi, yk, epsilon: float = 0.1,
                      gamma: float = 7.0, clip: float = DEFAULT_CLIP):
    """Gradients of ``gamma * log(1 - f(|yi - yk|))`` w.r.t. ``yi`` and ``yk``."""
    diff, d2 = _diff_d2(yi, yk)
    gi = np.clip(negative_coef(link.code, link.a, gamma, d2, epsilon) * diff, -clip, clip)
    return gi, -gi


def initialize_embedding(n: int, s: int, rng: RngState) -> Embedding:
    """Uniform jitter in ``[-0.5e-3, 0.5e-3]`` around the origin."""
    half = 0.5 / INIT_SCALE
    coords = rng.generator().uniform(-half, half, size=(n, s))
    return Embedding(coords.astype(np.float32))


def train(graph, cfg: LayoutConfig, init: Optional[Embedding] = None) -> Embedding:
    """Run ``cfg.n_samples(N)`` edge samples of asynchronous SGD.

    The returned embedding carries ``trace``: the mean sampled objective
    (positive term plus ``M`` noise terms) in each of ``cfg.trace_bins``
    consecutive stretches of training, pooled over workers.
    """
    n = graph.n_vertices
    if graph.n_edges == 0:
        raise InvalidInputError("graph has no edges")
    rng = RngState(cfg.seed)
    emb = init if init is not None else initialize_embedding(n, cfg.dim, rng.fork(0))
    Y = np.array(emb.coords, dtype=np.float32, order="C", copy=True)
    if Y.shape != (n, cfg.dim):
        raise InvalidInputError(f"initial embedding has shape {Y.shape}, expected {(n, cfg.dim)}")
    edges = EdgeSampler.from_graph(graph)
    noise = NoiseDistribution.from_graph(graph)
    total = cfg.n_samples(n)
    workers = max(1, min(cfg.workers, total))
    shares = [total // workers + (w < total % workers) for w in range(workers)]
    bins = max(0, cfg.trace_bins)
    sums = np.zeros((workers, bins), dtype=np.float64)
    counts = np.zeros((workers, bins), dtype=np.int64)
    sgd_rng = rng.fork(1)

    def run(w):
        _sgd(Y, edges.sources, edges.targets, edges.table.prob, edges.table.alias,
             noise.table.prob, noise.table.alias, cfg.link.code, float(cfg.link.a),
             float(cfg.gamma), int(cfg.negatives), float(cfg.rate), float(cfg.clip),
             float(cfg.epsilon), int(shares[w]), sgd_rng.fork(w).kernel_state(),
             sums[w], counts[w])

    if workers == 1:
        run(0)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for fut in [pool.submit(run, w) for w in range(workers)]:
                fut.result()
    if not np.all(np.isfinite(Y)):
        bad = np.flatnonzero(~np.isfinite(Y).all(axis=1))
        raise FloatingPointError(
            f"non-finite coordinates for {bad.size} points (first: {bad[:5].tolist()})")
    trace = None
    if bins:
        c = counts.sum(axis=0)
        trace = np.divide(sums.sum(axis=0), c, out=np.full(bins, np.nan), where=c > 0)
    return Embedding(Y, trace)


# ---------------------------------------------------------------------------
# objective evaluation
# ---------------------------------------------------------------------------


@numba.njit(nogil=True, cache=True)
def _mc_objective(Y, src, dst, eprob, ealias, nprob, nalias, kind, a, gamma,
                  n_neg, eps, n_samples, state):
    s = Y.shape[1]
    total = 0.0
    for t in range(n_samples):
        e = alias_draw(eprob, ealias, state)
        i = src[e]
        j = dst[e]
        d2 = 0.0
        for c in range(s):
            x = np.float64(Y[i, c]) - np.float64(Y[j, c])
            d2 += x * x
        val = log_f(kind, a, d2)
        for m in range(n_neg):
            k = negative_draw(nprob, nalias, state, i, j)
            if k < 0:
                break
            d2 = 0.0
            for c in range(s):
                x = np.float64(Y[i, c]) - np.float64(Y[k, c])
                d2 += x * x
            val += gamma * log_one_minus_f(kind, a, d2, eps)
        total += val
    return total / n_samples


def objective_estimate(graph, embedding: Embedding, cfg: LayoutConfig,
                       sample_count: int, rng: Optional[RngState] = None) -> float:
    """Monte-Carlo estimate of the negative-sampled objective.

    Draws ``sample_count`` edges by weight with ``M`` noise vertices each;
    the mean per-edge log-likelihood is scaled by the total edge weight.
    """
    rng = rng if rng is not None else RngState(cfg.seed).fork(2)
    edges = EdgeSampler.from_graph(graph)
    noise = NoiseDistribution.from_graph(graph)
    Y = np.ascontiguousarray(embedding.coords)
    mean = _mc_objective(Y, edges.sources, edges.targets, edges.table.prob,
                         edges.table.alias, noise.table.prob, noise.table.alias,
                         cfg.link.code, float(cfg.link.a), float(cfg.gamma),
                         int(cfg.negatives), float(cfg.epsilon), int(sample_count),
                         rng.kernel_state())
    return float(graph.weights.sum() * mean)


@numba.njit(cache=True)
def _map_terms(kind, a, gamma, eps, d2, which):
    out = np.empty_like(d2)
    for p in range(d2.shape[0]):
        x = d2[p]
        if which == 0:
            out[p] = log_f(kind, a, x)
        elif which == 1:
            out[p] = log_one_minus_f(kind, a, x, eps)
        elif which == 2:
            out[p] = positive_coef(kind, a, x)
        else:
            out[p] = negative_coef(kind, a, gamma, x, eps)
    return out


def _pairwise(embedding):
    Y = np.asarray(getattr(embedding, "coords", embedding), dtype=np.float64)
    diff = Y[:, None, :] - Y[None, :, :]
    return diff, np.einsum("ijc,ijc->ij", diff, diff)


def _terms(cfg: LayoutConfig, d2, which: int):
    return _map_terms(cfg.link.code, float(cfg.link.a), float(cfg.gamma),
                      float(cfg.epsilon), np.ascontiguousarray(d2, dtype=np.float64), which)


def objective_expected(graph, embedding: Embedding, cfg: LayoutConfig) -> float:
    """Exact expectation of :func:`objective_estimate` by full summation.

    Each edge's noise terms are averaged over the noise distribution
    conditioned on excluding the edge's two endpoints.
    """
    _, d2 = _pairwise(embedding)
    noise = NoiseDistribution.from_graph(graph).weights
    total = 0.0
    for i, j, w in graph.edges():
        q = noise.copy()
        q[i] = 0.0
        q[j] = 0.0
        neg = 0.0
        if q.sum() > 0:
            keep = np.flatnonzero(q)
            neg = cfg.negatives * cfg.gamma * float(
                q[keep] @ _terms(cfg, d2[i, keep], 1)) / q.sum()
        total += w * (_terms(cfg, d2[i, j:j + 1], 0)[0] + neg)
    return float(total)


def _edge_masks(graph):
    w = graph.to_matrix().toarray()
    edge = w > 0
    non_edge = ~edge
    np.fill_diagonal(non_edge, False)
    return w, edge, non_edge


def objective_exact(graph, embedding: Embedding, cfg: LayoutConfig) -> float:
    """Full-summation likelihood over all ordered vertex pairs.

    Weighted ``log f`` over edges plus ``gamma * log(1 - f)`` over every
    non-edge.  Quadratic in N; intended for small graphs.
    """
    _, d2 = _pairwise(embedding)
    w, edge, non_edge = _edge_masks(graph)
    pos = (w[edge] * _terms(cfg, d2[edge], 0)).sum()
    return float(pos + cfg.gamma * _terms(cfg, d2[non_edge], 1).sum())


def objective_gradient(graph, embedding: Embedding, cfg: LayoutConfig) -> np.ndarray:
    """Unclipped gradient of :func:`objective_exact` w.r.t. every coordinate."""
    diff, d2 = _pairwise(embedding)
    w, edge, non_edge = _edge_masks(graph)
    coef = np.zeros_like(d2)
    coef[edge] = w[edge] * _terms(cfg, d2[edge], 2)
    coef[non_edge] = _terms(cfg, d2[non_edge], 3)
    # pair (i, j) moves y_i by coef * (y_i - y_j) and y_j by the opposite
    return np.einsum("ij,ijc->ic", coef, diff) - np.einsum("ij,ijc->jc", coef, diff)
