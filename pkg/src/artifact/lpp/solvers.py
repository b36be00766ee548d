"""Last-passage values and optimal paths, by dynamic programming and by broken lines.

Paths run from (1, 1) to (N, M) in the grid chart with unit steps in i or j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import IntegrityError, ParameterError, SchemaError
from ..sampling import (ExponentialLaw, GeometricLaw, SeededStream, sample_exponential,
                        sample_geometric)
from ..brokenline.bricks import decompose
from ..brokenline.domain import RectDomain, to_ij
from ..brokenline.field import INT, FlowField, flow_from_boundary, tolerance

DP, BROKEN_LINE = "dp", "brokenline"


@dataclass(frozen=True)
class ExponentialWeights:
    alpha: float

    def __post_init__(self):
        ExponentialLaw(self.alpha)

    @property
    def name(self) -> str:
        return "exp"

    def limit(self, beta: float) -> float:
        """Almost-sure limit of G(N, floor(beta N)) / N."""
        return (1.0 + beta**0.5) ** 2 / self.alpha

    def sample(self, stream: SeededStream, shape) -> np.ndarray:
        return sample_exponential(stream, ExponentialLaw(self.alpha), shape)


@dataclass(frozen=True)
class GeometricWeights:
    lam: float

    def __post_init__(self):
        GeometricLaw(self.lam)

    @property
    def name(self) -> str:
        return "geo"

    def limit(self, beta: float) -> float:
        return (1.0 + (beta * self.lam) ** 0.5) ** 2 / (1.0 - self.lam) - 1.0

    def sample(self, stream: SeededStream, shape) -> np.ndarray:
        return sample_geometric(stream, GeometricLaw(self.lam), shape)


@dataclass(frozen=True, eq=False)
class LppInstance:
    xi: np.ndarray
    zeta_plus: np.ndarray | None = None
    zeta_minus: np.ndarray | None = None

    def __post_init__(self):
        xi = np.asarray(self.xi)
        if xi.ndim != 2 or 0 in xi.shape:
            raise SchemaError("weights must form a nonempty N x M grid")
        if not np.issubdtype(xi.dtype, np.integer):
            xi = xi.astype(np.float64)
        if xi.min() < 0:
            raise ParameterError("weights must be nonnegative")
        object.__setattr__(self, "xi", xi)
        N, M = xi.shape
        for name, want in (("zeta_plus", N), ("zeta_minus", M)):
            z = getattr(self, name)
            if z is not None:
                z = np.asarray(z)
                if z.shape != (want,):
                    raise SchemaError(f"{name} needs {want} entries")
                if z.min() < 0:
                    raise ParameterError(f"{name} must be nonnegative")
                object.__setattr__(self, name, z)

    @property
    def N(self) -> int:
        return self.xi.shape[0]

    @property
    def M(self) -> int:
        return self.xi.shape[1]

    @property
    def domain(self) -> RectDomain:
        return RectDomain(self.N, self.M)

    @property
    def mode(self) -> str:
        return INT if np.issubdtype(self.xi.dtype, np.integer) else "real"

    def has_boundary(self) -> bool:
        return any(z is not None and np.any(z) for z in (self.zeta_plus, self.zeta_minus))

    @classmethod
    def sample(cls, weights, N: int, M: int, stream: SeededStream) -> "LppInstance":
        return cls(weights.sample(stream, (N, M)))

    def to_dict(self) -> dict:
        out = {"N": self.N, "M": self.M, "mode": self.mode, "xi": self.xi.tolist()}
        if self.zeta_plus is not None:
            out["zeta_plus"] = self.zeta_plus.tolist()
        if self.zeta_minus is not None:
            out["zeta_minus"] = self.zeta_minus.tolist()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "LppInstance":
        try:
            dtype = np.int64 if data.get("mode", "real") == INT else np.float64
            xi = np.array(data["xi"], dtype=dtype)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"malformed instance JSON: {exc}") from None
        if xi.shape != (int(data.get("N", xi.shape[0])), int(data.get("M", xi.shape[-1]))):
            raise SchemaError("declared N, M do not match the weight grid")
        zp = data.get("zeta_plus")
        zm = data.get("zeta_minus")
        return cls(xi, None if zp is None else np.array(zp, dtype=dtype),
                   None if zm is None else np.array(zm, dtype=dtype))

    def __eq__(self, other) -> bool:
        if not isinstance(other, LppInstance):
            return NotImplemented

        def same(a, b):
            return (a is None and b is None) or (a is not None and b is not None and np.array_equal(a, b))

        return (np.array_equal(self.xi, other.xi) and self.xi.dtype == other.xi.dtype
                and same(self.zeta_plus, other.zeta_plus) and same(self.zeta_minus, other.zeta_minus))


@dataclass(frozen=True)
class LppSolution:
    value: float
    path: tuple[tuple[int, int], ...]
    method: str

    def path_sum(self, instance: LppInstance):
        i = np.array([p[0] for p in self.path]) - 1
        j = np.array([p[1] for p in self.path]) - 1
        return instance.xi[i, j].sum().item()

    def to_dict(self) -> dict:
        return {"value": self.value, "path": [list(p) for p in self.path], "method": self.method}


def check_path(path, N: int, M: int) -> None:
    """Raise IntegrityError unless ``path`` is an oriented corner-to-corner path."""
    if len(path) != N + M - 1 or tuple(path[0]) != (1, 1) or tuple(path[-1]) != (N, M):
        raise IntegrityError("path does not join (1, 1) to (N, M) in N + M - 1 sites", path=path)
    for (a, b), (c, d) in zip(path, path[1:]):
        if (c - a, d - b) not in ((1, 0), (0, 1)):
            raise IntegrityError("path takes a non-unit step", step=((a, b), (c, d)))


def last_passage_table(xi: np.ndarray) -> np.ndarray:
    """G(i, j) for every corner (i, j), as an N x M array."""
    N, M = xi.shape
    G = np.zeros((N, M), dtype=xi.dtype)
    G[0, :] = np.cumsum(xi[0, :])
    for i in range(1, N):
        row = G[i - 1] + xi[i]
        # running max of (previous row, left neighbour) along the row
        acc = row[0]
        out = [acc]
        for j in range(1, M):
            acc = max(G[i - 1, j], acc) + xi[i, j]
            out.append(acc)
        G[i] = out
    return G


def solve_dp(instance: LppInstance) -> LppSolution:
    """Corner recursion G(i, j) = xi(i, j) + max(G(i-1, j), G(i, j-1)).

    Backtracking prefers (i-1, j) on ties, the lexicographically smaller
    predecessor.
    """
    G = last_passage_table(instance.xi)
    i, j = instance.N, instance.M
    path = [(i, j)]
    while (i, j) != (1, 1):
        if i == 1:
            j -= 1
        elif j == 1:
            i -= 1
        elif G[i - 2, j - 1] >= G[i - 1, j - 2]:
            i -= 1
        else:
            j -= 1
        path.append((i, j))
    path.reverse()
    return LppSolution(G[-1, -1].item(), tuple(path), DP)


def brokenline_path(field: FlowField) -> list[tuple[int, int]]:
    """Walk back from (N, M): to (i, j-1) when SW flow >= NW flow, else to (i-1, j)."""
    i, j = field.N, field.M
    path = [(i, j)]
    while (i, j) != (1, 1):
        if i == 1:
            j -= 1
        elif j == 1:
            i -= 1
        elif field.ne[i - 1, j - 1] >= field.se[i - 1, j - 1]:
            j -= 1
        else:
            i -= 1
        path.append((i, j))
    path.reverse()
    return path


def solve_brokenline(instance: LppInstance, check_corners: bool = True) -> LppSolution:
    """G = H for the pure-birth field, with the path read off the flow.

    The result is validated: the path sum must equal H and, with
    ``check_corners``, the path must meet the left corners of every line of
    the decomposition exactly once. A failure is an integrity error.
    """
    if instance.has_boundary():
        raise ParameterError("the last-passage identity needs an instance without entering flow")
    field = flow_from_boundary(instance.domain, None, None, instance.xi)
    dec = decompose(field)
    left, right = field.boundary_sums()
    H = dec.total
    scale = tolerance(max(abs(left), abs(right), abs(H)))
    exact = instance.mode == INT
    if (left != right or left != H) if exact else (abs(left - right) > scale or abs(left - H) > scale):
        raise IntegrityError("crossing sums disagree", left=left, right=right, H=H)
    path = brokenline_path(field)
    check_path(path, instance.N, instance.M)
    sol = LppSolution(H, tuple(path), BROKEN_LINE)
    s = sol.path_sum(instance)
    if (s != H) if exact else abs(s - H) > scale:
        raise IntegrityError("path sum differs from the crossing total", path_sum=s, H=H)
    if check_corners:
        on_path = np.zeros((instance.N + 2, instance.M + 2), dtype=bool)
        for i, j in path:
            on_path[i, j] = True
        for k, tr in enumerate(dec.traces):
            hits = 0
            for t, x in tr.left_corners():
                i, j = to_ij(t, x)
                hits += bool(on_path[i, j])
            if hits != 1:
                raise IntegrityError(f"path meets {hits} left corners of line {k}", line=k, hits=hits)
    return sol


def boundary_comparison(instance: LppInstance) -> tuple:
    """(H with the instance's entering flow, H without it, gap); the gap is never negative."""
    domain = instance.domain
    with_b = flow_from_boundary(domain, instance.zeta_plus, instance.zeta_minus, instance.xi)
    without = flow_from_boundary(domain, None, None, instance.xi)
    h_with = with_b.boundary_sums()[0]
    h_without = without.boundary_sums()[0]
    if h_without > h_with + (0 if with_b.mode == INT else tolerance(h_with)):
        raise IntegrityError("adding entering flow decreased the crossing total",
                             with_boundary=h_with, without=h_without)
    return h_with, h_without, h_with - h_without
