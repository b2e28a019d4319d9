import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from knnvis.core import InvalidInputError
from knnvis.evaluation import (
    LabeledSet,
    brute_force_knn,
    knn_classify_accuracy,
    metrics_json,
    recall,
)
from knnvis.neighbors import NeighborLists

from conftest import naive_knn


def test_line_enumeration():
    nl = brute_force_knn([[0.0], [1.0], [3.0]], 2)
    assert nl.indices.tolist() == [[1, 2], [0, 2], [1, 0]]
    assert nl.distances.tolist() == [[1.0, 9.0], [1.0, 4.0], [4.0, 9.0]]


def test_closest_pair_mutual():
    x = np.random.default_rng(0).standard_normal((50, 3))
    x[7] = x[30] + 1e-3
    nl = brute_force_knn(x, 1)
    assert nl.indices[7, 0] == 30 and nl.indices[30, 0] == 7


def test_matches_quadratic_scan():
    x = np.random.default_rng(1).standard_normal((500, 12)).astype(np.float32)
    nl = brute_force_knn(x, 8)
    nl.validate(x)
    ref = naive_knn(x, 8)
    for i in range(500):
        assert set(nl.indices[i].tolist()) == set(ref[i])


def test_permutation_equivariant():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((120, 4))
    perm = rng.permutation(120)
    a = brute_force_knn(x, 5)
    b = brute_force_knn(x[perm], 5)
    inv = np.argsort(perm)
    for i in range(120):
        mapped = set(perm[b.indices[inv[i]]].tolist())
        assert mapped == set(a.indices[i].tolist())


def test_k_bounds():
    with pytest.raises(InvalidInputError):
        brute_force_knn(np.zeros((3, 2)), 3)
    with pytest.raises(InvalidInputError):
        brute_force_knn(np.zeros((3, 2)), 0)


def _lists(rows):
    return NeighborLists(np.array(rows), np.tile(np.arange(len(rows[0]), dtype=float),
                                                 (len(rows), 1)))


def test_recall_cases():
    exact = _lists([[1, 2], [0, 2], [0, 1]])
    assert recall(exact, exact).mean == 1.0
    assert recall(_lists([[3, 4], [3, 4], [3, 4]]), exact).mean == 0.0
    assert recall(_lists([[1, 3], [2, 4], [4, 0]]), exact).mean == 0.5
    with pytest.raises(InvalidInputError):
        recall(_lists([[1], [0], [0]]), exact)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 1000), st.integers(10, 60), st.integers(1, 6))
def test_recall_self_is_one(seed, n, k):
    x = np.random.default_rng(seed).standard_normal((n, 3))
    nl = brute_force_knn(x, k)
    assert recall(nl, nl).mean == 1.0


def test_separated_clusters_accuracy():
    rng = np.random.default_rng(3)
    x = np.vstack([rng.normal(0, 0.1, (50, 2)), rng.normal(10, 0.1, (50, 2))])
    y = np.repeat([0, 1], 50)
    assert knn_classify_accuracy(x, y, 5) == 1.0


def test_random_labels_near_half():
    accs = []
    for seed in range(20):
        rng = np.random.default_rng(seed)
        x = rng.normal(0, 0.01, (400, 2))
        y = rng.permutation(np.repeat([0, 1], 200))
        accs.append(knn_classify_accuracy(x, y, 5))
    assert abs(np.mean(accs) - 0.5) <= 0.05


def test_one_nn_pairs():
    x = np.array([[0.0], [0.1], [5.0], [5.1], [9.0], [9.1]])
    y = np.array([0, 0, 1, 1, 0, 0])
    assert knn_classify_accuracy(x, y, 1) == 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.1, 10.0), st.floats(0, 2 * np.pi))
def test_classifier_similarity_invariant(seed, scale, angle):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((80, 2))
    y = rng.integers(0, 3, 80)
    rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    moved = scale * x @ rot.T + np.array([3.0, -7.0])
    assert knn_classify_accuracy(moved, y, 5) == knn_classify_accuracy(x, y, 5)


def test_labeled_set():
    ls = LabeledSet.from_tokens(["a", "b", "a", "c"])
    assert ls.ids.tolist() == [0, 1, 0, 2]
    assert ls.n_classes == 3 and ls.token(3) == "c"


def test_metrics_json_shape():
    line = metrics_json(0.5, None, 15, 100)
    assert "\n" not in line
    assert json.loads(line) == {"mean_recall": 0.5, "knn_accuracy": None, "k": 15, "n": 100}
