import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import chisquare

from knnvis.core import InvalidInputError, RngState
from knnvis.sampler import (
    EdgeSampler,
    NoiseDistribution,
    build_alias,
    sample_edge,
    sample_negative,
)
from knnvis.weighting import WeightedGraph

DRAWS = 1_000_000


def _within_3se(draws, p):
    n = draws.shape[0]
    freq = np.bincount(draws, minlength=len(p)) / n
    se = np.sqrt(np.asarray(p) * (1 - np.asarray(p)) / n)
    return np.all(np.abs(freq - p) <= 3 * se + 1e-15), freq


def test_single_weight():
    t = build_alias([1.0])
    assert np.all(t.draw(RngState(0), 1000) == 0)


def test_uniform_needs_no_alias():
    t = build_alias([1.0, 1.0, 1.0, 1.0])
    assert np.all(t.prob == 1.0)


def test_three_weights_frequencies():
    t = build_alias([0.5, 0.25, 0.25])
    ok, freq = _within_3se(t.draw(RngState(1), DRAWS), [0.5, 0.25, 0.25])
    assert ok, freq


def test_bad_weights():
    for w in ([], [0.0, 0.0], [1.0, -1.0], [np.inf]):
        with pytest.raises(InvalidInputError):
            build_alias(w)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 1e6, allow_nan=False), min_size=1, max_size=200)
       .filter(lambda w: sum(w) > 0))
def test_stationary_exact(w):
    w = np.array(w)
    t = build_alias(w)
    assert np.abs(t.stationary() - w / w.sum()).max() <= 1e-12
    assert np.all((t.prob >= 0) & (t.prob <= 1))


def test_chi_square_random_weights():
    rng = np.random.default_rng(0)
    for trial, n in enumerate((10, 250, 1000)):
        w = rng.uniform(0.1, 1.0, n)
        t = build_alias(w)
        counts = np.bincount(t.draw(RngState(trial), DRAWS), minlength=n)
        assert chisquare(counts, DRAWS * w / w.sum()).pvalue > 0.001


def test_draws_deterministic():
    t = build_alias([3.0, 1.0, 2.0])
    assert np.array_equal(t.draw(RngState(5).fork(2), 500), t.draw(RngState(5).fork(2), 500))


def _edge_draws(weights, seed):
    g = WeightedGraph.from_edges(len(weights) + 1,
                                 [(0, i + 1, w) for i, w in enumerate(weights)])
    es = EdgeSampler.from_graph(g)
    draws = es.table.draw(RngState(seed), DRAWS)
    # undirected edge index = position of the leaf among 1..m
    leaf = np.where(es.sources[draws] == 0, es.targets[draws], es.sources[draws]) - 1
    return es, leaf


def test_equal_edges():
    _, leaf = _edge_draws([0.3, 0.3], 2)
    ok, freq = _within_3se(leaf, [0.5, 0.5])
    assert ok, freq


def test_weighted_edges():
    _, leaf = _edge_draws([1.0, 3.0], 3)
    ok, freq = _within_3se(leaf, [0.25, 0.75])
    assert ok, freq


def test_single_edge_and_state_advance():
    es = EdgeSampler.from_graph(WeightedGraph.from_edges(2, [(0, 1, 1.0)]))
    state = RngState(0).kernel_state()
    edges = {es.edge(sample_edge(es.table, state)) for _ in range(100)}
    assert edges <= {(0, 1), (1, 0)}
    assert sample_edge(es.table, RngState(1)) in (0, 1)


def test_two_vertices_exclude_one():
    noise = NoiseDistribution.from_degrees([1.0, 1.0])
    state = RngState(0).kernel_state()
    assert {sample_negative(noise, state, 0) for _ in range(200)} == {1}


def test_star_center_frequency():
    g = WeightedGraph.from_edges(6, [(0, i, 1.0) for i in range(1, 6)])
    noise = NoiseDistribution.from_graph(g)
    draws = noise.draw(RngState(4), DRAWS)
    centre = 5 ** 0.75 / (5 ** 0.75 + 5)
    p = [centre] + [(1 - centre) / 5] * 5
    ok, freq = _within_3se(draws, p)
    assert ok, freq


def test_uniform_degrees():
    noise = NoiseDistribution.from_degrees(np.full(8, 3.0))
    ok, freq = _within_3se(noise.draw(RngState(6), DRAWS), [1 / 8] * 8)
    assert ok, freq


def test_exclusions_respected():
    noise = NoiseDistribution.from_degrees([10.0, 1.0, 1.0, 50.0])
    draws = noise.draw(RngState(7), 20_000, exclude=3, target=0)
    assert set(draws.tolist()) == {1, 2}
    p = noise.probabilities(exclude=(3, 0))
    assert p[0] == p[3] == 0 and p.sum() == pytest.approx(1.0)


def test_nothing_admissible():
    noise = NoiseDistribution.from_degrees([1.0, 1.0])
    assert sample_negative(noise, RngState(0), 0, 1) == -1
