"""Brick diagram: a flow field as a totally ordered stack of crossing lines.

The field is integrated into a potential on the faces of the grid chart.
Face (a, b), 0 <= a <= N, 0 <= b <= M, sits at the dual site
(t, x) = (a + b - 1, b - a). Crossing an edge raises the potential by its
weight:

    F[a, b] - F[a - 1, b] = ne[a - 1, b]      F[a, b] - F[a, b - 1] = se[a, b - 1]

with F[0, 0] = 0. Conservation is exactly the statement that these two
rules agree around every site, F is nondecreasing in both indices and
F[N, M] is the crossing total. With levels q_0 = 0 < q_1 < ... < q_K the
distinct values of F, line k is the staircase separating the faces with
F <= q_{k-1} from the rest; it carries weight q_k - q_{k-1}, and an edge
lies on line k exactly when its two faces straddle that level.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from ..errors import IntegrityError, OrderError, ParameterError, SchemaError
from .domain import BrokenTrace, RectDomain, to_tx
from .field import INT, TOL, FlowField, tolerance


@dataclass(frozen=True, eq=False)
class Decomposition:
    domain: RectDomain
    traces: tuple[BrokenTrace, ...]
    weights: np.ndarray
    levels: np.ndarray = dc_field(default=None)
    potential: np.ndarray = dc_field(default=None)

    @property
    def mode(self) -> str:
        return INT if np.issubdtype(np.asarray(self.weights).dtype, np.integer) else "real"

    @property
    def total(self):
        return np.asarray(self.weights).sum().item() if len(self.weights) else 0

    def __len__(self) -> int:
        return len(self.traces)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Decomposition):
            return NotImplemented
        return (self.domain == other.domain and len(self) == len(other)
                and all(a == b for a, b in zip(self.traces, other.traces))
                and np.array_equal(self.weights, other.weights))

    def brick_sites(self) -> list[tuple[int, int]]:
        """Dual site (t, x) of every face, in the potential's row-major order."""
        N, M = self.domain.shape
        return [(a + b - 1, b - a) for a in range(N + 1) for b in range(M + 1)]

    def to_dict(self) -> dict:
        return {
            "domain": {"N": self.domain.N, "M": self.domain.M},
            "mode": self.mode,
            "lines": [{"vertices": [list(v) for v in tr.vertices()], "weight": w.item()}
                      for tr, w in zip(self.traces, np.asarray(self.weights))],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Decomposition":
        try:
            domain = RectDomain(int(data["domain"]["N"]), int(data["domain"]["M"]))
            lines = data["lines"]
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"decomposition JSON is missing {exc}") from None
        dtype = np.int64 if data.get("mode") == INT else np.float64
        traces = tuple(BrokenTrace.from_vertices(ln["vertices"]) for ln in lines)
        weights = np.array([ln["weight"] for ln in lines], dtype=dtype)
        return cls(domain, traces, weights)


def potential(field: FlowField) -> np.ndarray:
    """Face potential F of shape (N + 1, M + 1); raises if the field does not conserve."""
    ne, se = field.ne, field.se
    N, M = field.domain.shape
    F = np.zeros((N + 1, M + 1), dtype=ne.dtype)
    F[0, 1:] = np.cumsum(se[0, :])
    F[1:, :] = F[0, :] + np.cumsum(ne, axis=0)
    # the other family of differences must agree
    diff = F[:, 1:] - F[:, :-1] - se
    if field.mode == INT:
        bad = np.argwhere(diff != 0)
    else:
        bad = np.argwhere(np.abs(diff) > tolerance(F[-1, -1]))
    if bad.size:
        a, b = (int(v) for v in bad[0])
        raise IntegrityError("field does not conserve flow; potential is inconsistent",
                             face=(a, b + 1), mismatch=float(diff[a, b]))
    return F


def _levels(F: np.ndarray, integral: bool) -> tuple[np.ndarray, np.ndarray]:
    """Distinct levels and the potential snapped onto them."""
    flat = np.sort(F.ravel())
    if integral:
        levels = np.unique(flat)
        return levels, F
    tol = tolerance(flat[-1])
    keep = np.concatenate([[True], np.diff(flat) > tol])
    levels = flat[keep]
    levels[0] = 0.0
    idx = np.searchsorted(levels, F.ravel() + tol, side="right") - 1
    return levels, levels[idx].reshape(F.shape)


def _staircase(F: np.ndarray, level, M: int) -> BrokenTrace:
    """Crossing trace separating faces with F <= level from the others."""
    N = F.shape[0] - 1
    c = np.array([np.searchsorted(F[a, :], level, side="right") for a in range(N + 1)])
    # walk in the grid chart from row 0 to row N + 1, then reverse so x increases
    path = [(0, int(c[0])), (1, int(c[0]))]
    valid = [1 <= c[0] <= M]
    for a in range(N):
        i = a + 1
        for j in range(int(c[a]) - 1, int(c[a + 1]) - 1, -1):
            path.append((i, j))
            valid.append(True)
        path.append((i + 1, int(c[a + 1])))
        valid.append(1 <= c[a + 1] <= M)
    first = valid.index(True)
    last = len(valid) - 1 - valid[::-1].index(True)
    path = path[first:last + 2]
    ij = np.array(path[::-1])
    t, x = to_tx(ij[:, 0], ij[:, 1])
    return BrokenTrace(t, int(x[0]))


def decompose(field: FlowField) -> Decomposition:
    """Unique ordered family of crossing traces and weights summing to the field."""
    F = potential(field)
    levels, snapped = _levels(F, field.mode == INT)
    traces = tuple(_staircase(snapped, levels[k - 1], field.M) for k in range(1, len(levels)))
    weights = np.diff(levels)
    return Decomposition(field.domain, traces, weights, levels, F)


def check_order(traces) -> None:
    """Raise OrderError unless each trace lies strictly to the right of the previous one."""
    for k in range(1, len(traces)):
        lo, hi = traces[k - 1], traces[k]
        if not hi.right_of(lo) or hi == lo:
            raise OrderError(f"traces {k - 1} and {k} are not strictly ordered", (k - 1, k))


def recompose(dec: Decomposition) -> FlowField:
    """Sum of weight times edge indicator over the lines."""
    weights = np.asarray(dec.weights)
    if len(weights) != len(dec.traces):
        raise ParameterError("need one weight per trace")
    if len(weights) and weights.min() <= 0:
        raise ParameterError("line weights must be positive")
    check_order(dec.traces)
    N, M = dec.domain.shape
    dtype = np.int64 if np.issubdtype(weights.dtype, np.integer) else np.float64
    ne = np.zeros((N, M + 1), dtype)
    se = np.zeros((N + 1, M), dtype)
    for tr, w in zip(dec.traces, weights):
        if not tr.crosses(dec.domain):
            raise ParameterError(f"{tr} does not cross the domain")
        for kind, r, c in tr.slots(dec.domain):
            (ne if kind == "ne" else se)[r, c] += w
    out = FlowField(dec.domain, ne, se)
    out.check_conservation()
    return out


def crossing_weight(dec: Decomposition, trace: BrokenTrace):
    """Sum of w_j over the lines that contain ``trace``."""
    total = 0
    for tr, w in zip(dec.traces, np.asarray(dec.weights)):
        if trace.within(tr):
            total += w
    return total.item() if hasattr(total, "item") else total


__all__ = ["Decomposition", "potential", "decompose", "recompose", "check_order",
           "crossing_weight", "TOL"]
