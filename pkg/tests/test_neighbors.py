import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from knnvis.neighbors import NeighborLists, heap_drain, heap_push


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 50)), max_size=60),
       st.integers(1, 8))
def test_heap_keeps_k_smallest(items, k):
    hd = np.empty(k)
    hi = np.empty(k, dtype=np.int32)
    size = 0
    seen = set()
    for d, i in items:
        if i in seen:
            continue
        seen.add(i)
        size = heap_push(hd, hi, size, float(d), i)
    od = np.empty(k)
    oi = np.empty(k, dtype=np.int32)
    heap_drain(hd, hi, size, od, oi)
    uniq = {}
    for d, i in items:
        uniq.setdefault(i, float(d))
    want = sorted((d, i) for i, d in uniq.items())[:k]
    got = [(d, i) for d, i in zip(od.tolist(), oi.tolist()) if i >= 0]
    assert got == want


def test_text_round_trip():
    nl = NeighborLists(np.array([[1, 2], [0, -1], [0, 1]]),
                       np.array([[1.0, 4.0], [1.0, np.inf], [4.0, 9.0]]))
    back = NeighborLists.from_text(nl.to_text(), k=2)
    assert back == nl
    assert nl.lengths().tolist() == [2, 1, 2]


def test_truncate():
    nl = NeighborLists(np.array([[1, 2], [0, 2], [0, 1]]),
                       np.array([[1.0, 4.0], [1.0, 9.0], [4.0, 9.0]]))
    t = nl.truncate(1)
    assert t.indices.tolist() == [[1], [0], [0]]
