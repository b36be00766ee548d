"""Counts of broken lines crossing a fixed lattice line.

For an integer field, the number of lines through an edge is its weight, so
each intersection count is an edge read-out at the sites of the line:

* ``NE`` line (x - t fixed, one grid row): tau = weight of the NW edge
* ``SE`` line (x + t fixed, one grid column): tau = weight of the SW edge
* ``vertical`` line (t fixed): pair (tau-, tau+) = (NW, SW) weights
* ``horizontal`` line (x fixed): pair (tau-, tau+) = (NW, NE) weights

Sites with no flow report zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, ParameterError
from .domain import to_tx
from .field import INT, FlowField

NE, SE, VERTICAL, HORIZONTAL = "NE", "SE", "vertical", "horizontal"
LINE_KINDS = (NE, SE, VERTICAL, HORIZONTAL)


@dataclass(frozen=True)
class IntersectionStats:
    kind: str
    at: int
    sites: list[tuple[int, int]]
    values: np.ndarray  # shape (n,) for NE/SE, (n, 2) as (tau-, tau+) otherwise

    @property
    def paired(self) -> bool:
        return self.values.ndim == 2

    @property
    def total(self) -> int:
        return int(self.values.sum())

    @property
    def mean(self) -> float:
        return float(self.values.mean()) if self.values.size else float("nan")

    @property
    def time_span(self) -> int:
        """Length of the time interval a horizontal line covers: two units per site."""
        return 2 * len(self.sites)

    def histogram(self, top: int) -> np.ndarray:
        """Counts of values 0..top (paired kinds: a (top+1) x (top+1) table)."""
        v = np.minimum(self.values, top + 1)
        if self.paired:
            out = np.zeros((top + 2, top + 2), dtype=np.int64)
            np.add.at(out, (v[:, 0], v[:, 1]), 1)
            return out[: top + 1, : top + 1]
        return np.bincount(v, minlength=top + 2)[: top + 1]


def _line_sites(field: FlowField, kind: str, at: int) -> tuple[np.ndarray, np.ndarray]:
    N, M = field.domain.shape
    ii, jj = np.meshgrid(np.arange(1, N + 1), np.arange(1, M + 1), indexing="ij")
    t, x = to_tx(ii, jj)
    if kind == NE:
        mask = x - t == at
    elif kind == SE:
        mask = x + t == at
    elif kind == VERTICAL:
        mask = t == at
    elif kind == HORIZONTAL:
        mask = x == at
    else:
        raise ParameterError(f"unknown line kind {kind!r}; choose from {LINE_KINDS}")
    if not mask.any():
        raise DomainError(f"{kind} line at {at} misses the domain")
    order = np.argsort(t[mask] if kind != VERTICAL else x[mask], kind="stable")
    return ii[mask][order], jj[mask][order]


def intersection_stats(field: FlowField, kind: str, at: int) -> IntersectionStats:
    """Intersection counts along one line of the given kind.

    ``at`` fixes the line: x - t for NE, x + t for SE, t for vertical, x for
    horizontal.
    """
    if field.mode != INT:
        raise ParameterError("intersection counts need an integer (geometric) field")
    i, j = _line_sites(field, kind, at)
    r, c = i - 1, j - 1
    nw = field.se[r, c]
    sw = field.ne[r, c]
    ne = field.ne[r, c + 1]
    if kind == NE:
        values = nw
    elif kind == SE:
        values = sw
    elif kind == VERTICAL:
        values = np.stack([nw, sw], axis=1)
    else:
        values = np.stack([nw, ne], axis=1)
    t, x = to_tx(i, j)
    sites = [(int(a), int(b)) for a, b in zip(t, x)]
    return IntersectionStats(kind, int(at), sites, np.asarray(values, dtype=np.int64))


def horizontal_joint_pmf(m, n, lam: float):
    """P(tau- = m, tau+ = n) = (1-l)(1-l^2) l^(2(m+n)) (l^-m + l^-n - 1 - l)."""
    if not 0.0 < lam < 1.0:
        raise ParameterError("lambda must lie in (0,1)")
    m = np.asarray(m, dtype=float)
    n = np.asarray(n, dtype=float)
    return (1 - lam) * (1 - lam**2) * lam ** (2 * (m + n)) * (lam**-m + lam**-n - 1 - lam)
