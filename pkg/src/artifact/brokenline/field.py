"""Flow fields on rectangular domains.

Edge weights live in two arrays indexed through the grid chart:

* ``ne[i - 1, j]`` is the edge from (i, j) to (i, j + 1), a step (+1, +1) in
  (t, x); shape (N, M + 1). Column 0 carries the entering flow zeta+, column
  M the exiting flow eta+.
* ``se[i, j - 1]`` is the edge from (i, j) to (i + 1, j), a step (+1, -1);
  shape (N + 1, M). Row 0 carries the entering flow zeta-, row N the exiting
  flow eta-.

At site (i, j) the four incident edges are
SW = ne[i-1, j-1] (zeta+), NW = se[i-1, j-1] (zeta-),
NE = ne[i-1, j] (eta+) and SE = se[i, j-1] (eta-).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import IntegrityError, ParameterError, SchemaError, UnsupportedInputError
from .domain import RectDomain, to_ij, to_tx

INT, REAL = "int", "real"
TOL = 1e-9
DIRECTIONS = ("NE", "SE", "NW", "SW")


def tolerance(scale: float) -> float:
    """Absolute tolerance for real-mode comparisons of quantities of size ``scale``."""
    return TOL * max(1.0, abs(float(scale)))


@njit(cache=True, nogil=True)
def _flow(zp, zm, xi, ne, se):
    B, N, M = xi.shape
    for b in range(B):
        for i in range(N):
            ne[b, i, 0] = zp[b, i]
        for j in range(M):
            se[b, 0, j] = zm[b, j]
        # row-major order is a topological order: (i, j) only needs (i, j-1) and (i-1, j)
        for i in range(N):
            for j in range(M):
                d = ne[b, i, j] - se[b, i, j]
                ne[b, i, j + 1] = xi[b, i, j] + (d if d > 0 else 0)
                se[b, i + 1, j] = xi[b, i, j] + (-d if d < 0 else 0)


def flow_arrays(zeta_plus, zeta_minus, xi) -> tuple[np.ndarray, np.ndarray]:
    """Batched flow construction: ``xi`` has shape (..., N, M).

    ``zeta_plus`` has shape (..., N) and ``zeta_minus`` shape (..., M); either
    may be None for a zero boundary. Returns (ne, se) with the same leading
    dimensions. Integer inputs give integer arrays, anything else float64.
    """
    xi = np.asarray(xi)
    if xi.ndim < 2:
        raise SchemaError("births must have shape (..., N, M)")
    *lead, N, M = xi.shape
    zp = np.zeros((*lead, N), dtype=xi.dtype) if zeta_plus is None else np.asarray(zeta_plus)
    zm = np.zeros((*lead, M), dtype=xi.dtype) if zeta_minus is None else np.asarray(zeta_minus)
    if zp.shape != (*lead, N):
        raise SchemaError(f"zeta+ needs one entry per row: expected shape {(*lead, N)}, got {zp.shape}")
    if zm.shape != (*lead, M):
        raise SchemaError(f"zeta- needs one entry per column: expected shape {(*lead, M)}, got {zm.shape}")
    integral = all(np.issubdtype(a.dtype, np.integer) for a in (zp, zm, xi))
    dtype = np.int64 if integral else np.float64
    for name, a in (("zeta+", zp), ("zeta-", zm), ("xi", xi)):
        if a.size and a.min() < 0:
            raise ParameterError(f"{name} must be nonnegative")
    B = int(np.prod(lead)) if lead else 1
    xi3 = np.ascontiguousarray(xi.reshape(B, N, M), dtype=dtype)
    ne = np.empty((B, N, M + 1), dtype=dtype)
    se = np.empty((B, N + 1, M), dtype=dtype)
    _flow(zp.reshape(B, N).astype(dtype), zm.reshape(B, M).astype(dtype), xi3, ne, se)
    return ne.reshape(*lead, N, M + 1), se.reshape(*lead, N + 1, M)


def exit_sums(ne: np.ndarray, se: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Batched (left, right) crossing sums of flow arrays with leading dims."""
    left = ne[..., :, 0].sum(axis=-1) + se[..., -1, :].sum(axis=-1)
    right = se[..., 0, :].sum(axis=-1) + ne[..., :, -1].sum(axis=-1)
    return left, right


@dataclass(frozen=True, eq=False)
class FlowField:
    domain: RectDomain
    ne: np.ndarray
    se: np.ndarray

    def __post_init__(self):
        N, M = self.domain.shape
        ne, se = np.asarray(self.ne), np.asarray(self.se)
        if ne.shape != (N, M + 1) or se.shape != (N + 1, M):
            raise SchemaError(f"edge arrays must have shapes {(N, M + 1)} and {(N + 1, M)}")
        integral = np.issubdtype(ne.dtype, np.integer) and np.issubdtype(se.dtype, np.integer)
        dtype = np.int64 if integral else np.float64
        ne, se = ne.astype(dtype), se.astype(dtype)
        ne.flags.writeable = False
        se.flags.writeable = False
        object.__setattr__(self, "ne", ne)
        object.__setattr__(self, "se", se)
        if (ne.size and ne.min() < 0) or (se.size and se.min() < 0):
            raise ParameterError("edge weights must be nonnegative")

    @property
    def mode(self) -> str:
        return INT if np.issubdtype(self.ne.dtype, np.integer) else REAL

    @property
    def N(self) -> int:
        return self.domain.N

    @property
    def M(self) -> int:
        return self.domain.M

    # -- per-site views in the grid chart, each of shape (N, M) --
    @property
    def sw(self) -> np.ndarray:
        return self.ne[:, :-1]

    @property
    def nw(self) -> np.ndarray:
        return self.se[:-1, :]

    @property
    def ne_out(self) -> np.ndarray:
        return self.ne[:, 1:]

    @property
    def se_out(self) -> np.ndarray:
        return self.se[1:, :]

    @property
    def xi(self) -> np.ndarray:
        """Births: xi = min(eta+, eta-) at every site."""
        return np.minimum(self.ne_out, self.se_out)

    @property
    def zeta_plus(self) -> np.ndarray:
        return self.ne[:, 0]

    @property
    def zeta_minus(self) -> np.ndarray:
        return self.se[0, :]

    @property
    def eta_plus_exit(self) -> np.ndarray:
        return self.ne[:, -1]

    @property
    def eta_minus_exit(self) -> np.ndarray:
        return self.se[-1, :]

    def has_zero_boundary(self) -> bool:
        return not self.zeta_plus.any() and not self.zeta_minus.any()

    def residual(self) -> np.ndarray:
        """NW + NE - SW - SE at every site; zero for a conserving field."""
        return self.nw + self.ne_out - self.sw - self.se_out

    def check_conservation(self) -> None:
        r = self.residual()
        if self.mode == INT:
            bad = np.argwhere(r != 0)
        else:
            scale = max(float(self.ne.max(initial=0)), float(self.se.max(initial=0)))
            bad = np.argwhere(np.abs(r) > tolerance(scale))
        if bad.size:
            i, j = (int(v) + 1 for v in bad[0])
            raise IntegrityError(f"conservation fails at grid site ({i}, {j})",
                                 site=(i, j), residual=float(r[i - 1, j - 1]))

    def boundary_sums(self) -> tuple:
        """(entering zeta+ plus exiting eta-, entering zeta- plus exiting eta+)."""
        left = self.zeta_plus.sum() + self.eta_minus_exit.sum()
        right = self.zeta_minus.sum() + self.eta_plus_exit.sum()
        return left.item(), right.item()

    def edge(self, t: int, x: int, direction: str):
        """Weight of the edge leaving (t, x) in ``direction`` (NE, SE, NW or SW)."""
        step = {"NE": (1, 1), "SE": (1, -1), "NW": (-1, 1), "SW": (-1, -1)}.get(direction)
        if step is None:
            raise ParameterError(f"unknown direction {direction!r}")
        kind, r, c = self.domain.edge_slot((t, x), (t + step[0], x + step[1]))
        return (self.ne if kind == "ne" else self.se)[r, c].item()

    def __eq__(self, other) -> bool:
        if not isinstance(other, FlowField):
            return NotImplemented
        return (self.domain == other.domain and self.mode == other.mode
                and np.array_equal(self.ne, other.ne) and np.array_equal(self.se, other.se))

    def allclose(self, other: "FlowField") -> bool:
        if self.domain != other.domain:
            return False
        scale = max(float(np.abs(self.ne).max(initial=0)), float(np.abs(self.se).max(initial=0)))
        tol = tolerance(scale)
        return bool(np.all(np.abs(self.ne - other.ne) <= tol) and np.all(np.abs(self.se - other.se) <= tol))

    def to_dict(self) -> dict:
        """Edge list keyed by the lower-t endpoint and a NE or SE direction."""
        edges = []
        N, M = self.domain.shape
        for r in range(N):
            for c in range(M + 1):
                t, x = to_tx(r + 1, c)
                edges.append({"t": int(t), "x": int(x), "dir": "NE", "value": self.ne[r, c].item()})
        for r in range(N + 1):
            for c in range(M):
                t, x = to_tx(r, c + 1)
                edges.append({"t": int(t), "x": int(x), "dir": "SE", "value": self.se[r, c].item()})
        return {"domain": {"N": N, "M": M}, "mode": self.mode, "edges": edges}

    @classmethod
    def from_dict(cls, data: dict) -> "FlowField":
        try:
            domain = RectDomain(int(data["domain"]["N"]), int(data["domain"]["M"]))
            mode = data.get("mode", REAL)
            edges = data["edges"]
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"field JSON is missing {exc}") from None
        if mode not in (INT, REAL):
            raise SchemaError(f"unknown mode {mode!r}")
        dtype = np.int64 if mode == INT else np.float64
        N, M = domain.shape
        ne = np.zeros((N, M + 1), dtype=dtype)
        se = np.zeros((N + 1, M), dtype=dtype)
        seen_ne = np.zeros(ne.shape, bool)
        seen_se = np.zeros(se.shape, bool)
        steps = {"NE": (1, 1), "SE": (1, -1), "NW": (-1, 1), "SW": (-1, -1)}
        for e in edges:
            try:
                t, x, d, v = int(e["t"]), int(e["x"]), e["dir"], e["value"]
            except (KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"malformed edge entry {e!r}") from exc
            if d not in steps:
                raise SchemaError(f"unknown direction {d!r}")
            kind, r, c = domain.edge_slot((t, x), (t + steps[d][0], x + steps[d][1]))
            arr, seen = (ne, seen_ne) if kind == "ne" else (se, seen_se)
            if seen[r, c]:
                raise SchemaError(f"edge at ({t}, {x}) {d} listed twice")
            if mode == INT and int(v) != v:
                raise SchemaError("integer-mode field holds a non-integer weight")
            arr[r, c] = v
            seen[r, c] = True
        if not (seen_ne.all() and seen_se.all()):
            raise SchemaError("field JSON does not list every edge of the closed domain")
        return cls(domain, ne, se)


def flow_from_boundary(domain: RectDomain, zeta_plus=None, zeta_minus=None, xi=None) -> FlowField:
    """Field generated by entering flows and births.

    ``zeta_plus[i-1]`` enters site (i, 1) from the low side, ``zeta_minus[j-1]``
    enters (1, j), ``xi[i-1, j-1]`` pairs are born at (i, j). At each site the
    incoming pairs annihilate, xi pairs are born, and the survivors keep their
    direction: eta+ = xi + [zeta+ - zeta-]+ and eta- = xi + [zeta- - zeta+]+.
    Sites are processed in an order where both feeding neighbours come first,
    which gives the same field as the sweep by increasing t.
    """
    N, M = domain.shape
    if xi is None:
        raise SchemaError("births are required (use zeros for none)")
    xi = np.asarray(xi)
    if xi.shape != (N, M):
        raise SchemaError(f"births must have shape {(N, M)}, got {xi.shape}")
    ne, se = flow_arrays(zeta_plus, zeta_minus, xi)
    return FlowField(domain, ne, se)


def zero_field(domain: RectDomain, mode: str = INT) -> FlowField:
    dtype = np.int64 if mode == INT else np.float64
    N, M = domain.shape
    return FlowField(domain, np.zeros((N, M + 1), dtype), np.zeros((N + 1, M), dtype))


def reflect(field: FlowField) -> FlowField:
    """Time reflection (t, x) -> (-t, x) of a pure-birth field.

    The mirrored domain is M x N in the grid chart and site (a, b) there
    (0-based) carries the births of (N - 1 - b, M - 1 - a).
    """
    if not field.has_zero_boundary():
        raise UnsupportedInputError("reflection is only defined for fields without entering flow")
    xi = np.ascontiguousarray(field.xi[::-1, ::-1].T)
    return flow_from_boundary(field.domain.mirrored(), None, None, xi)


def site_of(domain: RectDomain, t: int, x: int) -> tuple[int, int]:
    i, j = to_ij(t, x)
    if not domain.contains_ij(i, j):
        raise ParameterError(f"({t}, {x}) is not a site of the domain")
    return int(i), int(j)
