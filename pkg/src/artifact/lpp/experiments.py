"""Monte Carlo experiments on last-passage values of large grids.

Values come from the crossing total of the pure-birth flow, computed in
batches. Trial t at side N draws its weights from ``stream.spawn(N, t)``, so
a table does not depend on the batch size.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import IntegrityError, ParameterError
from ..parallel import parallel_map
from ..sampling import SeededStream
from ..brokenline.field import exit_sums, flow_arrays, tolerance
from ..brokenline.reversible import (ExponentialFamily, GeometricFamily, optimal_exponential_split,
                                     optimal_geometric_split, sample_reversible_boundary)
from ..brokenline.domain import RectDomain
from .solvers import ExponentialWeights, GeometricWeights

LLN_COLUMNS = ("family", "param", "beta", "N", "M", "trials", "mean", "se", "sd", "limit",
               "delta", "tail_freq")
GAP_COLUMNS = ("N", "M", "trials", "mean_gap", "mean_gap_over_N", "se_gap_over_N")


def weights_from(family: str, param: float):
    if family == "exp":
        return ExponentialWeights(param)
    if family == "geo":
        return GeometricWeights(param)
    raise ParameterError(f"unknown weight family {family!r}; choose exp or geo")


def crossing_values(xi: np.ndarray, zeta_plus=None, zeta_minus=None) -> np.ndarray:
    """Crossing totals of a batch of fields; the two boundary sums must agree."""
    ne, se = flow_arrays(zeta_plus, zeta_minus, xi)
    left, right = exit_sums(ne, se)
    if np.issubdtype(left.dtype, np.integer):
        bad = left != right
    else:
        bad = np.abs(left - right) > 1e-9 * np.maximum(1.0, np.abs(left))
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise IntegrityError("crossing sums disagree", trial=k, left=left[k], right=right[k])
    return left


def _batches(trials: int, size: int):
    for start in range(0, trials, size):
        yield range(start, min(trials, start + size))


@dataclass(frozen=True)
class LlnRow:
    family: str
    param: float
    beta: float
    N: int
    M: int
    trials: int
    mean: float
    se: float
    sd: float
    limit: float
    delta: float
    tail_freq: float

    def record(self) -> dict:
        return asdict(self)


@dataclass
class LlnTable:
    rows: list[LlnRow] = field(default_factory=list)
    seed: int | None = None

    def records(self) -> list[dict]:
        return [r.record() for r in self.rows]

    def to_dict(self) -> dict:
        return {"seed": self.seed, "rows": self.records()}

    @classmethod
    def from_dict(cls, data: dict) -> "LlnTable":
        return cls([LlnRow(**r) for r in data["rows"]], data.get("seed"))


def lln_experiment(weights, beta: float, N_list, trials: int, stream: SeededStream,
                   delta: float = 0.1, batch: int = 16, threads: int = 1) -> LlnTable:
    """Mean and spread of G(N, floor(beta N)) / N per N, with the analytic limit.

    ``tail_freq`` is the fraction of trials with |G/N - limit| > delta.
    """
    if not beta > 0:
        raise ParameterError("beta must be positive")
    if trials < 2:
        raise ParameterError("need at least two trials for a standard error")
    limit = weights.limit(beta)
    param = weights.alpha if isinstance(weights, ExponentialWeights) else weights.lam
    for N in N_list:
        if int(N) < 1 or int(math.floor(beta * int(N))) < 1:
            raise ParameterError(f"N = {N} with beta = {beta} gives an empty grid")

    def run(N: int) -> LlnRow:
        M = int(math.floor(beta * N))
        values = np.empty(trials)
        for idx in _batches(trials, batch):
            xi = np.stack([weights.sample(stream.spawn(N, t), (N, M)) for t in idx])
            values[idx.start:idx.stop] = crossing_values(xi)
        g = values / N
        sd = float(g.std(ddof=1))
        return LlnRow(weights.name, float(param), float(beta), N, M, trials,
                      float(g.mean()), sd / math.sqrt(trials), sd, float(limit),
                      float(delta), float(np.mean(np.abs(g - limit) > delta)))

    rows = parallel_map(run, [int(N) for N in N_list], threads)
    return LlnTable(rows, stream.seed)


def reversible_split(weights, beta: float):
    """Boundary family whose births match ``weights`` and whose split is optimal for beta."""
    if isinstance(weights, ExponentialWeights):
        return optimal_exponential_split(weights.alpha, beta)
    return optimal_geometric_split(weights.lam, beta)


@dataclass(frozen=True)
class GapRow:
    N: int
    M: int
    trials: int
    mean_gap: float
    mean_gap_over_N: float
    se_gap_over_N: float

    def record(self) -> dict:
        return asdict(self)


def boundary_gap_experiment(family, beta: float, N_list, trials: int, stream: SeededStream,
                            batch: int = 16) -> list[GapRow]:
    """Gap between H with reversible entering flow and H without, per N.

    ``family`` is an :class:`ExponentialFamily` or :class:`GeometricFamily`;
    a trial where the gap is negative is an integrity error.
    """
    if not isinstance(family, (ExponentialFamily, GeometricFamily)):
        raise ParameterError(f"unknown boundary family {family!r}")
    rows = []
    for N in N_list:
        N = int(N)
        M = int(math.floor(beta * N))
        domain = RectDomain(N, M)
        gaps = np.empty(trials)
        for idx in _batches(trials, batch):
            drawn = [sample_reversible_boundary(domain, family, stream.spawn(N, t)) for t in idx]
            zp, zm, xi = (np.stack(a) for a in zip(*drawn))
            with_b = crossing_values(xi, zp, zm)
            without = crossing_values(xi)
            slack = np.array([tolerance(v) for v in with_b]) if with_b.dtype.kind == "f" else 0
            if np.any(without > with_b + slack):
                k = int(np.flatnonzero(without > with_b + slack)[0])
                raise IntegrityError("adding entering flow decreased the crossing total",
                                     N=N, trial=idx.start + k)
            gaps[idx.start:idx.stop] = with_b - without
        g = gaps / N
        rows.append(GapRow(N, M, trials, float(gaps.mean()), float(g.mean()),
                           float(g.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan))
    return rows
