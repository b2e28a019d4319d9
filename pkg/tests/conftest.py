import numpy as np
import pytest

from knnvis.synth import gaussian_mixture


def naive_knn(x, k):
    """Quadratic scan with Python floats; ties broken by id."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    out = []
    for i in range(n):
        d = []
        for j in range(n):
            if j != i:
                d.append((float(((x[i] - x[j]) ** 2).sum()), j))
        d.sort()
        out.append([j for _, j in d[:k]])
    return out


@pytest.fixture(scope="session")
def mixture_2000():
    x, y = gaussian_mixture(2000, 100, 10, seed=3)
    return x, y


@pytest.fixture(scope="session")
def exact_2000(mixture_2000):
    from knnvis.evaluation import brute_force_knn

    return brute_force_knn(mixture_2000[0], 10)


@pytest.fixture(scope="session")
def mixture_5000():
    from knnvis.core import as_data_matrix
    from knnvis.evaluation import brute_force_knn

    x, _ = gaussian_mixture(5000, 100, 10, seed=5)
    data = as_data_matrix(x)
    return data, brute_force_knn(data, 10)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
