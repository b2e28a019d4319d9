"""Gaussian mixture generator used by the ``gen`` subcommand and the tests."""

from __future__ import annotations

import numpy as np

from .core import InvalidConfigError, RngState


def gaussian_mixture(n: int, d: int, clusters: int = 10, spread: float = 1.0,
                     seed: int = 0, separation: float = 10.0):
    """Draw ``n`` points from ``clusters`` isotropic Gaussians in ``d`` dims.

    Cluster centres are standard normal vectors scaled by ``separation``;
    points scatter around them with standard deviation ``spread``.  Cluster
    sizes differ by at most one.  Returns ``(points, labels)``.
    """
    if n < 1 or d < 1 or clusters < 1:
        raise InvalidConfigError("n, d and clusters must all be >= 1")
    gen = RngState(seed).generator()
    centres = gen.standard_normal((clusters, d)) * separation
    labels = np.arange(n) % clusters
    gen.shuffle(labels)
    points = centres[labels] + spread * gen.standard_normal((n, d))
    return points.astype(np.float32), labels.astype(np.int64)
