"""Reversible boundary laws and the column-by-column geometric chain.

Two families keep the field stationary under time reversal: geometric
entering flows Geom(l+), Geom(l-) with Geom(l+ l-) births, and exponential
entering flows Exp(a+), Exp(a-) with Exp(a+ + a-) births. Entering flow
zeta+ uses the "+" parameter, zeta- the "-" one.

The geometric chain builds a field one time column at a time: given the
incoming pair (m+, m-) at a site it draws the outgoing pair (n+, n-) from
q(n+, n- | m+, m-) = (1 - l^2) l^(n+ + n- - |m+ - m-|) on n+ - n- = m+ - m-,
that is min(n+, n-) ~ Geom(l^2) with the difference forced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError, SchemaError
from ..sampling import (ExponentialLaw, GeometricLaw, SeededStream, sample_exponential,
                        sample_geometric)
from .domain import RectDomain
from .field import FlowField


@dataclass(frozen=True)
class GeometricFamily:
    lam_plus: float
    lam_minus: float

    def __post_init__(self):
        for v in (self.lam_plus, self.lam_minus):
            if not 0.0 < v < 1.0:
                raise ParameterError(f"geometric parameters must lie in (0,1), got {v}")

    @property
    def birth(self) -> float:
        return self.lam_plus * self.lam_minus


@dataclass(frozen=True)
class ExponentialFamily:
    alpha_plus: float
    alpha_minus: float

    def __post_init__(self):
        for v in (self.alpha_plus, self.alpha_minus):
            if not v > 0.0:
                raise ParameterError(f"exponential rates must be positive, got {v}")

    @property
    def birth(self) -> float:
        return self.alpha_plus + self.alpha_minus


def sample_reversible_boundary(domain: RectDomain, family, stream: SeededStream, size=None):
    """(zeta_plus, zeta_minus, xi) with shapes (*size, N), (*size, M), (*size, N, M)."""
    N, M = domain.shape
    lead = () if size is None else ((size,) if isinstance(size, int) else tuple(size))
    if isinstance(family, GeometricFamily):
        zp = sample_geometric(stream.spawn(0), GeometricLaw(family.lam_plus), (*lead, N))
        zm = sample_geometric(stream.spawn(1), GeometricLaw(family.lam_minus), (*lead, M))
        xi = sample_geometric(stream.spawn(2), GeometricLaw(family.birth), (*lead, N, M))
    elif isinstance(family, ExponentialFamily):
        zp = sample_exponential(stream.spawn(0), ExponentialLaw(family.alpha_plus), (*lead, N))
        zm = sample_exponential(stream.spawn(1), ExponentialLaw(family.alpha_minus), (*lead, M))
        xi = sample_exponential(stream.spawn(2), ExponentialLaw(family.birth), (*lead, N, M))
    else:
        raise ParameterError(f"unknown boundary family {family!r}")
    return zp, zm, xi


def kernel_mass(n_plus: int, n_minus: int, m_plus: int, m_minus: int, lam: float) -> float:
    """q(n+, n- | m+, m-) with normaliser l^|m+ - m-| / (1 - l^2)."""
    if not 0.0 < lam < 1.0:
        raise ParameterError("lambda must lie in (0,1)")
    if n_plus - n_minus != m_plus - m_minus or min(n_plus, n_minus) < 0:
        return 0.0
    z = lam ** abs(m_plus - m_minus) / (1.0 - lam * lam)
    return lam ** (n_plus + n_minus) / z


@dataclass(frozen=True)
class ColumnState:
    """Outgoing flows of the sites at time ``t``; ``i`` lists their rows."""

    t: int
    i: np.ndarray
    eta_plus: np.ndarray
    eta_minus: np.ndarray

    @property
    def j(self) -> np.ndarray:
        return self.t + 2 - self.i


def column_rows(domain: RectDomain, t: int) -> np.ndarray:
    """Rows i of the sites with i + j - 2 = t."""
    N, M = domain.shape
    lo, hi = max(1, t + 2 - M), min(N, t + 1)
    return np.arange(lo, hi + 1)


def geometric_chain_step(
    domain: RectDomain,
    prev: ColumnState | None,
    zeta_plus,
    zeta_minus,
    lam: float,
    stream: SeededStream,
) -> ColumnState:
    """Draw the column after ``prev`` (the first column when ``prev`` is None)."""
    if not 0.0 < lam < 1.0:
        raise ParameterError("lambda must lie in (0,1)")
    t = 0 if prev is None else prev.t + 1
    if t > domain.N + domain.M - 2:
        raise ParameterError("the chain has already covered the domain")
    rows = column_rows(domain, t)
    cols = t + 2 - rows
    zp = np.asarray(zeta_plus)
    zm = np.asarray(zeta_minus)
    m_plus = np.empty(len(rows), dtype=np.int64)
    m_minus = np.empty(len(rows), dtype=np.int64)
    prev_plus = {} if prev is None else dict(zip(prev.i.tolist(), prev.eta_plus.tolist()))
    prev_minus = {} if prev is None else dict(zip(prev.i.tolist(), prev.eta_minus.tolist()))
    for k, (i, j) in enumerate(zip(rows.tolist(), cols.tolist())):
        # up-right flow arrives from (i, j - 1), down-right flow from (i - 1, j)
        m_plus[k] = zp[i - 1] if j == 1 else prev_plus[i]
        m_minus[k] = zm[j - 1] if i == 1 else prev_minus[i - 1]
    k_min = np.atleast_1d(sample_geometric(stream.spawn(t), GeometricLaw(lam * lam), len(rows)))
    d = m_plus - m_minus
    return ColumnState(t, rows, k_min + np.maximum(d, 0), k_min + np.maximum(-d, 0))


def run_geometric_chain(domain: RectDomain, zeta_plus, zeta_minus, lam: float,
                        stream: SeededStream) -> tuple[FlowField, list[ColumnState]]:
    """Run the chain over every column and assemble the flow field."""
    N, M = domain.shape
    zp = np.asarray(zeta_plus, dtype=np.int64)
    zm = np.asarray(zeta_minus, dtype=np.int64)
    if zp.shape != (N,) or zm.shape != (M,):
        raise SchemaError("entering flows must have one entry per row and per column")
    ne = np.zeros((N, M + 1), dtype=np.int64)
    se = np.zeros((N + 1, M), dtype=np.int64)
    ne[:, 0] = zp
    se[0, :] = zm
    cols: list[ColumnState] = []
    prev = None
    for _ in range(N + M - 1):
        prev = geometric_chain_step(domain, prev, zp, zm, lam, stream)
        cols.append(prev)
        ne[prev.i - 1, prev.j] = prev.eta_plus
        se[prev.i, prev.j - 1] = prev.eta_minus
    return FlowField(domain, ne, se), cols


def optimal_exponential_split(alpha: float, beta: float) -> ExponentialFamily:
    """a+- = alpha / (1 + beta^(+-1/2)), minimising 1/a+ + beta/a- subject to a+ + a- = alpha."""
    if not alpha > 0 or not beta > 0:
        raise ParameterError("need alpha > 0 and beta > 0")
    r = math.sqrt(beta)
    return ExponentialFamily(alpha / (1.0 + r), alpha / (1.0 + 1.0 / r))


def optimal_geometric_split(lam: float, beta: float) -> GeometricFamily:
    """l+ = (l + sqrt(beta l)) / (1 + sqrt(beta l)) and l- = l / l+, so l+ l- = l."""
    if not 0 < lam < 1 or not beta > 0:
        raise ParameterError("need 0 < lambda < 1 and beta > 0")
    s = math.sqrt(beta * lam)
    lp = (lam + s) / (1.0 + s)
    return GeometricFamily(lp, lam / lp)
