"""Seed-reproducible sampling primitives.

Every random quantity in the package is drawn from a :class:`SeededStream`.
A stream is addressed by ``(seed, substream_id, *path)`` and backed by a
Philox counter-based generator keyed through ``numpy.random.SeedSequence``,
so per-site and per-trial substreams are independent without coordination
and can be regenerated in any order.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ParameterError

U64 = 2**64


def zigzag(x: int) -> int:
    """Map an integer onto a nonnegative key: 0, -1, 1, -2, 2 ... -> 0, 1, 2, 3, 4."""
    return 2 * x if x >= 0 else -2 * x - 1


def entropy_seed() -> int:
    """Draw a fresh 64-bit seed from the OS."""
    return int.from_bytes(os.urandom(8), "little")


class SeededStream:
    """Handle on one independent substream.

    Identical ``(seed, substream_id, path)`` always yields the identical value
    sequence. :meth:`spawn` derives child streams (one per site, per trial ...)
    without consuming anything from the parent.
    """

    __slots__ = ("seed", "substream_id", "path", "_gen")

    def __init__(self, seed: int, substream_id: int = 0, path: tuple[int, ...] = ()):
        seed = int(seed)
        if not 0 <= seed < U64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {seed}")
        if substream_id < 0 or any(k < 0 for k in path):
            raise ParameterError("substream ids must be nonnegative")
        self.seed = seed
        self.substream_id = int(substream_id)
        self.path = tuple(int(k) for k in path)
        self._gen: np.random.Generator | None = None

    @property
    def key(self) -> tuple[int, ...]:
        return (self.substream_id, *self.path)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
            self._gen = np.random.Generator(np.random.Philox(ss))
        return self._gen

    def spawn(self, *keys: int) -> "SeededStream":
        return SeededStream(self.seed, self.substream_id, self.path + tuple(keys))

    def uniform(self, size=None):
        """Uniform variates on (0, 1]; never exactly zero so logs are finite."""
        return 1.0 - self.generator.random(size)

    def integers(self, high: int, size=None):
        return self.generator.integers(0, high, size=size)

    def __repr__(self) -> str:
        return f"SeededStream(seed={self.seed}, key={self.key})"


@dataclass(frozen=True)
class GeometricLaw:
    """P(k) = (1 - lam) * lam**k on k = 0, 1, 2, ..."""

    lam: float

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ParameterError(f"geometric parameter must lie in (0,1), got {self.lam}")

    def mass(self, k):
        return (1.0 - self.lam) * np.power(self.lam, k)

    @property
    def mean(self) -> float:
        return self.lam / (1.0 - self.lam)

    @property
    def variance(self) -> float:
        return self.lam / (1.0 - self.lam) ** 2


@dataclass(frozen=True)
class ExponentialLaw:
    alpha: float

    def __post_init__(self):
        if not self.alpha > 0.0:
            raise ParameterError(f"exponential rate must be positive, got {self.alpha}")

    @property
    def mean(self) -> float:
        return 1.0 / self.alpha

    @property
    def variance(self) -> float:
        return 1.0 / self.alpha**2


@dataclass(frozen=True)
class PoissonLaw:
    mu: float

    def __post_init__(self):
        if not self.mu >= 0.0:
            raise ParameterError(f"Poisson mean must be nonnegative, got {self.mu}")

    def mass(self, n: int) -> float:
        if self.mu == 0.0:
            return 1.0 if n == 0 else 0.0
        return math.exp(-self.mu + n * math.log(self.mu) - math.lgamma(n + 1))

    @property
    def mean(self) -> float:
        return self.mu


def sample_geometric(stream: SeededStream, law: GeometricLaw, size=None):
    """Inversion: floor(log U / log lam) with U in (0, 1]."""
    u = stream.uniform(size)
    k = np.floor(np.log(u) / math.log(law.lam))
    if size is None:
        return int(k)
    return k.astype(np.int64)


def sample_exponential(stream: SeededStream, law: ExponentialLaw, size=None):
    u = stream.uniform(size)
    x = -np.log(u) / law.alpha
    return float(x) if size is None else x


@lru_cache(maxsize=64)
def _poisson_cdf(mu: float) -> np.ndarray:
    n_max = int(math.ceil(mu + 12.0 * math.sqrt(mu) + 25.0))
    n = np.arange(n_max + 1)
    lg = np.array([math.lgamma(k + 1.0) for k in n])
    pmf = np.exp(-mu + n * math.log(mu) - lg)
    return np.cumsum(pmf)


def sample_poisson(stream: SeededStream, law: PoissonLaw, size=None):
    """Inversion against a cached cumulative table."""
    if law.mu == 0.0:
        return 0 if size is None else np.zeros(size, dtype=np.int64)
    cdf = _poisson_cdf(float(law.mu))
    u = stream.uniform(size)
    k = np.minimum(np.searchsorted(cdf, u, side="left"), len(cdf) - 1)
    if size is None:
        return int(k)
    return k.astype(np.int64)
