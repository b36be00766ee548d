"""Crossing total: the two boundary sums and the total line weight must agree."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import IntegrityError
from .bricks import decompose
from .field import INT, FlowField, tolerance


@dataclass(frozen=True)
class CrossingTotal:
    left: float
    right: float
    H: float

    def as_tuple(self) -> tuple:
        return (self.left, self.right, self.H)


def crossing_total(field: FlowField) -> CrossingTotal:
    """(entering zeta+ + exiting eta-, entering zeta- + exiting eta+, sum of line weights)."""
    left, right = field.boundary_sums()
    H = decompose(field).total
    if field.mode == INT:
        ok = left == right == H
    else:
        tol = tolerance(max(abs(left), abs(right), abs(H)))
        ok = abs(left - right) <= tol and abs(left - H) <= tol
    if not ok:
        raise IntegrityError("crossing sums disagree", left=left, right=right, H=H)
    return CrossingTotal(left, right, H)
