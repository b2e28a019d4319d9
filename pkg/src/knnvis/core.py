"""Shared types, the distance kernel and deterministic random streams.

Every compiled kernel in the package draws randomness from a one-word
SplitMix64 state (``uint64[1]``).  Python-side code derives those words
from :class:`RngState`, which wraps :class:`numpy.random.SeedSequence` so
that forked streams are reproducible from ``(seed, stream path)`` alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's precondition."""


class InvalidConfigError(ValueError):
    """Raised when a tunable is outside its admissible range."""


@dataclass(frozen=True)
class DataMatrix:
    """N dense row vectors of dimension d, stored as C-contiguous float32.

    The matrix is immutable after construction and may be shared freely
    between worker threads.
    """

    values: np.ndarray

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=np.float32)
        if values.ndim != 2:
            raise InvalidInputError(f"expected a 2-d matrix, got shape {values.shape}")
        if values.shape[0] < 1 or values.shape[1] < 1:
            raise InvalidInputError(f"matrix must be non-empty, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("matrix contains NaN or Inf")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.n_points


def as_data_matrix(data) -> DataMatrix:
    if isinstance(data, DataMatrix):
        return data
    return DataMatrix(np.asarray(data))


# ---------------------------------------------------------------------------
# distance kernel
# ---------------------------------------------------------------------------


@numba.njit(nogil=True, cache=True)
def sqdist(a, b):
    # Fixed left-to-right accumulation in float64; no fastmath so every
    # caller gets bit-identical results for the same pair.
    acc = 0.0
    for k in range(a.shape[0]):
        diff = np.float64(a[k]) - np.float64(b[k])
        acc += diff * diff
    return acc


def squared_distance(a, b) -> float:
    """Squared Euclidean distance between two rows of equal length."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 1 or b.ndim != 1 or a.shape[0] != b.shape[0]:
        raise InvalidInputError(
            f"dimension mismatch: {a.shape} vs {b.shape}"
        )
    return float(sqdist(np.ascontiguousarray(a, dtype=np.float64),
                        np.ascontiguousarray(b, dtype=np.float64)))


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0


@numba.njit(nogil=True, cache=True)
def next_u64(state):
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


@numba.njit(nogil=True, cache=True)
def next_uniform(state):
    """Uniform double in [0, 1) with 53 random bits."""
    return np.float64(next_u64(state) >> _S11) * _INV53


@numba.njit(nogil=True, cache=True)
def next_below(state, n):
    """Uniform integer in [0, n)."""
    r = np.int64(next_uniform(state) * n)
    if r >= n:
        r = n - 1
    return r


@numba.njit(nogil=True, cache=True)
def fill_uniform(state, out):
    for i in range(out.shape[0]):
        out[i] = next_uniform(state)


@dataclass(frozen=True)
class RngState:
    """Reproducible random stream identified by a seed and a stream path.

    ``stream`` is the tuple of fork indices leading from the root seed to
    this state; ``RngState(7)`` is the root and ``RngState(7).fork(3)`` has
    ``stream == (3,)``.
    """

    seed: int
    stream: tuple = field(default=())

    def fork(self, stream: int) -> "RngState":
        return rng_fork(self, stream)

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.seed, spawn_key=self.stream)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed_sequence()))

    def kernel_state(self) -> np.ndarray:
        """Fresh one-word state array for the compiled SplitMix64 kernels."""
        return self.seed_sequence().generate_state(1, np.uint64)

    def uniforms(self, size: int) -> np.ndarray:
        out = np.empty(size, dtype=np.float64)
        fill_uniform(self.kernel_state(), out)
        return out


def rng_fork(parent: RngState, stream: int) -> RngState:
    if stream < 0:
        raise InvalidInputError("stream id must be non-negative")
    return RngState(parent.seed, parent.stream + (int(stream),))


def as_rng(seed_or_state) -> RngState:
    if isinstance(seed_or_state, RngState):
        return seed_or_state
    return RngState(int(seed_or_state))


def split_range(n: int, parts: int):
    """Split ``range(n)`` into ``parts`` contiguous, near-equal blocks."""
    parts = max(1, min(parts, n)) if n > 0 else 1
    bounds = np.linspace(0, n, parts + 1).astype(np.int64)
    return [(int(bounds[i]), int(bounds[i + 1])) for i in range(parts)]
