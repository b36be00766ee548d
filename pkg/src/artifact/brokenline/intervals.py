"""Maximal broken line on a trace, by interval transfer through each vertex.

Atoms are points p in (0, eta(e)] standing on an edge. At a vertex y the
incoming edge e1 (smaller x) and outgoing edge e2 fall into one of four
cases, each associating atoms by a shift restricted to a window:

* Case 1, SW in and NW out: p2 = p1 on (0, eta(NW)]
* Case 2, SE in and NW out: p2 = p1 + eta(SW) on (eta(SW), eta(NW)]
* Case 3, SW in and NE out: p2 = p1 - eta(NW) on (0, eta(SW) - eta(NW)]
* Case 4, SE in and NE out: p2 = p1 + eta(NE) - eta(SE) on (eta(NE) - xi, eta(NE)]

Intervals are half-open (a, b], empty when a >= b.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError
from .domain import BrokenTrace, to_ij
from .field import FlowField

CASE_SW_NW, CASE_SE_NW, CASE_SW_NE, CASE_SE_NE = 1, 2, 3, 4


@dataclass(frozen=True, eq=False)
class BrokenLine:
    trace: BrokenTrace
    intervals: tuple[tuple[float, float], ...]

    @property
    def weight(self):
        a, b = self.intervals[0]
        return b - a


def vertex_case(trace: BrokenTrace, k: int) -> int:
    """Association case at interior vertex ``k`` (1 <= k < n)."""
    came_from_below = trace.t[k] - trace.t[k - 1] == 1   # entered along SW
    leaves_up = trace.t[k + 1] - trace.t[k] == 1          # leaves along NE
    if came_from_below:
        return CASE_SW_NE if leaves_up else CASE_SW_NW
    return CASE_SE_NE if leaves_up else CASE_SE_NW


def _site_edges(field: FlowField, t: int, x: int):
    i, j = to_ij(t, x)
    if not field.domain.contains_ij(i, j):
        raise DomainError(f"interior vertex ({t}, {x}) lies outside the domain")
    r, c = i - 1, j - 1
    sw, nw = field.ne[r, c], field.se[r, c]
    ne, se = field.ne[r, c + 1], field.se[r + 1, c]
    return sw, nw, ne, se, min(ne, se)


def _edge_values(field: FlowField, trace: BrokenTrace) -> list:
    out = []
    for kind, r, c in trace.slots(field.domain):
        out.append((field.ne if kind == "ne" else field.se)[r, c])
    return out


def transfer(case: int, sw, nw, ne, se, xi):
    """(shift, window_lo, window_hi) of the interval map at one vertex."""
    if case == CASE_SW_NW:
        return 0, 0, nw
    if case == CASE_SE_NW:
        return sw, sw, nw
    if case == CASE_SW_NE:
        return -nw, 0, sw - nw
    return ne - se, ne - xi, ne


def propagate_interval(field: FlowField, trace: BrokenTrace) -> BrokenLine | None:
    """The maximal broken line with the given trace, or None if its weight is 0.

    Forward pass: J_1 = (0, eta(e_1)] and J_{k+1} = (J_k + s) intersected with
    the window of vertex k. Whatever survives to the last edge is pulled back
    through the shifts, which gives every J_k of the maximal line.
    """
    values = _edge_values(field, trace)
    shifts = []
    a, b = 0, values[0]
    if a >= b:
        return None
    for k in range(1, trace.n):
        sw, nw, ne, se, xi = _site_edges(field, int(trace.t[k]), trace.x0 + k)
        s, lo, hi = transfer(vertex_case(trace, k), sw, nw, ne, se, xi)
        shifts.append(s)
        a, b = max(a + s, lo), min(b + s, hi)
        if a >= b:
            return None
    out = [(a, b)]
    for s in reversed(shifts):
        a, b = a - s, b - s
        out.append((a, b))
    out.reverse()
    return BrokenLine(trace, tuple((x.item() if hasattr(x, "item") else x,
                                    y.item() if hasattr(y, "item") else y) for x, y in out))


def weight(field: FlowField, trace: BrokenTrace):
    """w(trace): weight of the maximal broken line, 0 when there is none."""
    line = propagate_interval(field, trace)
    return 0 if line is None else line.weight


def chase_point(field: FlowField, trace: BrokenTrace, p1) -> list | None:
    """Follow one atom (e_1, p1) along the trace by the pointwise rules.

    Returns the associated points (p_1, ..., p_n), or None when the atom has
    no partner at some vertex. Written directly from the per-atom rules so it
    can check :func:`propagate_interval` independently.
    """
    values = _edge_values(field, trace)
    if not 0 < p1 <= values[0]:
        return None
    points = [p1]
    p = p1
    for k in range(1, trace.n):
        sw, nw, ne, se, xi = _site_edges(field, int(trace.t[k]), trace.x0 + k)
        e1, e2 = values[k - 1], values[k]
        case = vertex_case(trace, k)
        if case == CASE_SW_NW:
            if not p <= min(e1, e2):
                return None
            q = p
        elif case == CASE_SE_NW:
            q = p + sw
            if not sw < q <= e2:
                return None
        elif case == CASE_SW_NE:
            if not nw < p <= e1:
                return None
            q = p - nw
        else:
            if not e1 - xi < p <= e1:
                return None
            q = e2 - (e1 - p)
        points.append(q)
        p = q
    return points


def contains(line: BrokenLine | None, points) -> bool:
    """Every point of a chain lies in the matching interval of ``line``."""
    if line is None:
        return False
    return all(a < p <= b for p, (a, b) in zip(points, line.intervals))


def random_subtrace(trace: BrokenTrace, rng: np.random.Generator) -> BrokenTrace:
    a = int(rng.integers(0, trace.n))
    b = int(rng.integers(a + 1, trace.n + 1))
    return trace.subtrace(a, b)
