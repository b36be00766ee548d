"""Rectangular domains on the tilted lattice and broken traces.

Sites are (t, x) with t + x even. The grid chart maps (i, j), 1 <= i <= N,
1 <= j <= M, to (t, x) = (i + j - 2, j - i): moving j -> j + 1 is a step to
(t + 1, x + 1) and i -> i + 1 a step to (t + 1, x - 1). The closure adds the
rows i = 0, i = N + 1 and the columns j = 0, j = M + 1 (corners excluded).

Boundary classes of the closure, by the single edge each boundary site has
into the domain:

* ``minus_low``  ((i, 0))      sends its flow up-right into (i, 1)
* ``plus_low``   ((0, j))      sends its flow down-right into (1, j)
* ``plus_high``  ((i, M + 1))  receives the up-right flow leaving (i, M)
* ``minus_high`` ((N + 1, j))  receives the down-right flow leaving (N, j)

Every boundary site touches exactly one site of the domain, so no boundary
site belongs to two classes; the four corner sites of the rectangle, such as
(1, 0) and (0, 1) beside (1, 1), each land in the class of their own edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, ParameterError

MINUS_LOW, PLUS_LOW, PLUS_HIGH, MINUS_HIGH = "minus_low", "plus_low", "plus_high", "minus_high"


def to_tx(i, j):
    """Grid chart (i, j) -> lattice (t, x); works elementwise on arrays."""
    return i + j - 2, j - i


def to_ij(t, x):
    """Lattice (t, x) -> grid chart (i, j); the inverse of :func:`to_tx`."""
    if np.any((np.asarray(t) + np.asarray(x)) % 2):
        raise DomainError(f"({t}, {x}) is not on the even sublattice")
    return (t - x) // 2 + 1, (t + x) // 2 + 1


@dataclass(frozen=True)
class RectDomain:
    N: int
    M: int

    def __post_init__(self):
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "M", int(self.M))
        if self.N < 1 or self.M < 1:
            raise ParameterError(f"domain sides must be at least 1, got {self.N}x{self.M}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.N, self.M)

    def contains(self, t: int, x: int) -> bool:
        """(t, x) in S."""
        if (t + x) % 2:
            return False
        return 0 <= t + x <= 2 * (self.M - 1) and 0 <= t - x <= 2 * (self.N - 1)

    def contains_ij(self, i: int, j: int) -> bool:
        return 1 <= i <= self.N and 1 <= j <= self.M

    def boundary_class(self, t: int, x: int) -> str | None:
        """Class of a closure site outside S, or None for sites of S or far away."""
        if (t + x) % 2:
            return None
        i, j = to_ij(t, x)
        if self.contains_ij(i, j):
            return None
        if j == 0 and 1 <= i <= self.N:
            return MINUS_LOW
        if i == 0 and 1 <= j <= self.M:
            return PLUS_LOW
        if j == self.M + 1 and 1 <= i <= self.N:
            return PLUS_HIGH
        if i == self.N + 1 and 1 <= j <= self.M:
            return MINUS_HIGH
        return None

    def in_closure(self, t: int, x: int) -> bool:
        return self.contains(t, x) or self.boundary_class(t, x) is not None

    def sites(self) -> list[tuple[int, int]]:
        return [to_tx(i, j) for i in range(1, self.N + 1) for j in range(1, self.M + 1)]

    def boundary(self) -> dict[str, list[tuple[int, int]]]:
        N, M = self.N, self.M
        return {
            MINUS_LOW: [to_tx(i, 0) for i in range(1, N + 1)],
            PLUS_LOW: [to_tx(0, j) for j in range(1, M + 1)],
            PLUS_HIGH: [to_tx(i, M + 1) for i in range(1, N + 1)],
            MINUS_HIGH: [to_tx(N + 1, j) for j in range(1, M + 1)],
        }

    def mirrored(self) -> "RectDomain":
        """Domain of the time reflection (t, x) -> (-t, x), recentred on the chart."""
        return RectDomain(self.M, self.N)

    def edge_slot(self, a: tuple[int, int], b: tuple[int, int]) -> tuple[str, int, int]:
        """Array slot of the edge between lattice sites ``a`` and ``b``.

        Returns ("ne", r, c) for an edge along (+1, +1) in (t, x), stored at
        ne[r, c], or ("se", r, c) for one along (+1, -1). Raises DomainError if
        the edge is not in E(S-bar).
        """
        (t0, x0), (t1, x1) = sorted([tuple(a), tuple(b)])
        if t1 - t0 != 1 or abs(x1 - x0) != 1:
            raise DomainError(f"{a} and {b} are not lattice neighbours")
        i, j = to_ij(t0, x0)
        if x1 == x0 + 1:
            # (i, j) -> (i, j + 1)
            if 1 <= i <= self.N and 0 <= j <= self.M:
                return ("ne", i - 1, j)
        else:
            # (i, j) -> (i + 1, j)
            if 0 <= i <= self.N and 1 <= j <= self.M:
                return ("se", i, j - 1)
        raise DomainError(f"edge {a}-{b} is not an edge of the closed domain")


@dataclass(frozen=True, eq=False)
class BrokenTrace:
    """Vertices (y_0, ..., y_n), n >= 1, with x up by one and t up or down by one per step."""

    t: np.ndarray
    x0: int

    def __post_init__(self):
        t = np.asarray(self.t, dtype=np.int64)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x0", int(self.x0))
        if t.ndim != 1 or len(t) < 2:
            raise ParameterError("a broken trace needs at least two vertices")
        if not np.all(np.abs(np.diff(t)) == 1):
            raise ParameterError("consecutive vertices must differ by one in t")
        if (int(t[0]) + self.x0) % 2:
            raise ParameterError("trace vertices must lie on the even sublattice")

    @classmethod
    def from_vertices(cls, vertices) -> "BrokenTrace":
        v = np.asarray(vertices, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ParameterError("vertices must be (t, x) pairs")
        if not np.all(np.diff(v[:, 1]) == 1):
            raise ParameterError("x must increase by exactly one per step")
        return cls(v[:, 0], int(v[0, 1]))

    @property
    def n(self) -> int:
        """Number of edges."""
        return len(self.t) - 1

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.x0, self.x0 + len(self.t))

    @property
    def x1(self) -> int:
        return self.x0 + self.n

    def vertices(self) -> list[tuple[int, int]]:
        return [(int(t), int(x)) for t, x in zip(self.t, self.x)]

    def t_of(self, x: int) -> int:
        return int(self.t[x - self.x0])

    def left_corners(self) -> list[tuple[int, int]]:
        """Vertices whose two neighbours on the trace both sit one step later in t."""
        t = self.t
        k = np.flatnonzero((t[1:-1] < t[:-2]) & (t[1:-1] < t[2:])) + 1
        return [(int(t[i]), self.x0 + int(i)) for i in k]

    def subtrace(self, a: int, b: int) -> "BrokenTrace":
        """Vertices a..b (indices into this trace, a < b)."""
        if not 0 <= a < b <= self.n:
            raise ParameterError("sub-trace needs 0 <= a < b <= n")
        return BrokenTrace(self.t[a:b + 1], self.x0 + a)

    def within(self, other: "BrokenTrace") -> bool:
        """self is a sub-trace of ``other``."""
        if self.x0 < other.x0 or self.x1 > other.x1:
            return False
        off = self.x0 - other.x0
        return bool(np.array_equal(self.t, other.t[off:off + len(self.t)]))

    def right_of(self, other: "BrokenTrace") -> bool:
        """self is weakly to the right of ``other`` in t."""
        lo, hi = max(self.x0, other.x0), min(self.x1, other.x1)
        if lo <= hi:
            a = self.t[lo - self.x0: hi - self.x0 + 1]
            b = other.t[lo - other.x0: hi - other.x0 + 1]
            if np.any(a < b):
                return False
        return int(self.t.max()) >= int(other.t.min())

    def __eq__(self, other) -> bool:
        if not isinstance(other, BrokenTrace):
            return NotImplemented
        return self.x0 == other.x0 and np.array_equal(self.t, other.t)

    def __hash__(self) -> int:
        return hash((self.x0, self.t.tobytes()))

    def __repr__(self) -> str:
        return f"BrokenTrace({self.vertices()})"

    def inside(self, domain: RectDomain) -> bool:
        """Every edge lies in E(S-bar); interior vertices then lie in S."""
        try:
            self.slots(domain)
        except DomainError:
            return False
        inner = zip(self.t[1:-1], self.x[1:-1])
        return all(domain.contains(int(t), int(x)) for t, x in inner)

    def crosses(self, domain: RectDomain) -> bool:
        if not self.inside(domain):
            return False
        ends = [(int(self.t[0]), self.x0), (int(self.t[-1]), self.x1)]
        return all(domain.boundary_class(t, x) is not None for t, x in ends)

    def slots(self, domain: RectDomain) -> list[tuple[str, int, int]]:
        """Array slot of every edge, in order."""
        v = self.vertices()
        return [domain.edge_slot(v[k], v[k + 1]) for k in range(self.n)]

    def to_dict(self) -> dict:
        return {"vertices": [list(p) for p in self.vertices()]}

    @classmethod
    def from_dict(cls, data: dict) -> "BrokenTrace":
        return cls.from_vertices(data["vertices"])
