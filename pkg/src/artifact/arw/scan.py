"""Monte Carlo estimates of P(R_0 >= r) over parameter grids.

Each (mu, lambda, M) cell draws its trials from ``stream.spawn(cell, t)``,
where ``cell`` is the cell's position in the sorted grid. A trial stabilizes
under the lowest-active policy and stops early once R_0 reaches the largest
requested r, since R_0 only grows and its final value is order-invariant.
Runs that hit the step cap are counted separately and never enter an
estimate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import ParameterError
from ..parallel import parallel_map
from ..sampling import SeededStream
from .engine import CAP, DEFAULT_STEP_CAP, drive
from .stacks import RandomStacks
from .state import LabelPolicy, init_state

SCAN_COLUMNS = ("mu", "lambda", "M", "r", "trials", "hits", "not_stabilized", "estimate", "se")


@dataclass(frozen=True)
class ScanRow:
    mu: float
    lam: float
    M: int
    r: int
    trials: int
    hits: int
    not_stabilized: int

    @property
    def completed(self) -> int:
        return self.trials - self.not_stabilized

    @property
    def estimate(self) -> float:
        return self.hits / self.completed if self.completed else math.nan

    @property
    def se(self) -> float:
        n = self.completed
        if not n:
            return math.nan
        p = self.hits / n
        return math.sqrt(p * (1.0 - p) / n)

    def record(self) -> dict:
        return {
            "mu": self.mu, "lambda": self.lam, "M": self.M, "r": self.r,
            "trials": self.trials, "hits": self.hits, "not_stabilized": self.not_stabilized,
            "estimate": self.estimate, "se": self.se,
        }


@dataclass
class ScanTable:
    rows: list[ScanRow] = field(default_factory=list)
    seed: int | None = None

    def records(self) -> list[dict]:
        return [r.record() for r in self.rows]

    def select(self, mu: float, lam: float, r: int) -> list[ScanRow]:
        """Rows of one (mu, lambda, r) slice, ordered by M."""
        out = [row for row in self.rows if row.mu == mu and row.lam == lam and row.r == r]
        return sorted(out, key=lambda row: row.M)

    def to_dict(self) -> dict:
        return {"seed": self.seed, "rows": [asdict(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, data: dict) -> "ScanTable":
        return cls([ScanRow(**r) for r in data["rows"]], data.get("seed"))


def _grid(values, name: str, cast) -> list:
    vals = sorted({cast(v) for v in values})
    if not vals:
        raise ParameterError(f"{name} grid is empty")
    return vals


def _scan_cell(cell, mu, lam, M, rs, trials, stream, p, step_cap, window) -> list[ScanRow]:
    r0 = np.zeros(trials, dtype=np.int64)
    capped = 0
    policy = LabelPolicy.lowest_active()
    for t in range(trials):
        sub = stream.spawn(cell, t)
        state = init_state(mu, M, sub.spawn(0))
        stop = rs[-1] if window == 0 else 0
        res = drive(state, RandomStacks(sub.spawn(1), lam, p), policy, step_cap, r_stop=stop)
        if res.status == CAP:
            capped += 1
            r0[t] = -1
        else:
            r0[t] = max(res.state.Rx(x) for x in range(-window, window + 1))
    done = r0[r0 >= 0]
    return [ScanRow(mu, lam, M, r, trials, int((done >= r).sum()), capped) for r in rs]


def fixation_scan(
    mu_grid,
    lambda_grid,
    M_grid,
    r_grid,
    trials: int,
    stream: SeededStream,
    p: float = 0.5,
    step_cap: int = DEFAULT_STEP_CAP,
    threads: int = 1,
    window: int = 0,
) -> ScanTable:
    """Estimate P(R_0 >= r) for every grid cell, sorted by (mu, lambda, M, r).

    Cells are independent substreams, so ``threads`` never changes the table.
    With ``window`` > 0 the event is max over |x| <= window of R_x >= r, an
    exploratory variant; runs then go to full stabilization.
    """
    mus = _grid(mu_grid, "mu", float)
    lams = _grid(lambda_grid, "lambda", float)
    Ms = _grid(M_grid, "M", int)
    rs = _grid(r_grid, "r", int)
    if trials < 1:
        raise ParameterError("need at least one trial per cell")
    if window < 0:
        raise ParameterError("window must be nonnegative")
    if min(mus) < 0 or min(lams) <= 0 or min(Ms) < 0 or min(rs) < 1:
        raise ParameterError("need mu >= 0, lambda > 0, M >= 0 and r >= 1")
    cells = list(itertools.product(mus, lams, Ms))

    def run(cell: int) -> list[ScanRow]:
        mu, lam, M = cells[cell]
        return _scan_cell(cell, mu, lam, M, rs, trials, stream, p, step_cap, window)

    rows: list[ScanRow] = []
    for chunk in parallel_map(run, range(len(cells)), threads):
        rows.extend(chunk)
    return ScanTable(rows, stream.seed)


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    se: float
    lo: float
    hi: float

    @property
    def positive(self) -> bool:
        return self.lo > 0

    @property
    def admits_no_increase(self) -> bool:
        return self.lo <= 0


def drift_slope(rows: list[ScanRow], z: float = 1.96) -> SlopeFit:
    """Weighted least-squares slope of the estimate against M with a normal CI.

    Each cell is weighted by the inverse of its binomial variance, with the
    proportion shrunk to (hits + 1/2) / (n + 1) so empty or saturated cells
    keep a finite weight.
    """
    if len({row.M for row in rows}) < 2:
        raise ParameterError("slope needs at least two box sizes")
    M = np.array([row.M for row in rows], dtype=float)
    y = np.array([row.estimate for row in rows], dtype=float)
    n = np.array([row.completed for row in rows], dtype=float)
    shrunk = (np.array([row.hits for row in rows]) + 0.5) / (n + 1.0)
    w = n / (shrunk * (1.0 - shrunk))
    mbar = np.sum(w * M) / np.sum(w)
    sxx = np.sum(w * (M - mbar) ** 2)
    slope = float(np.sum(w * (M - mbar) * y) / sxx)
    se = float(1.0 / math.sqrt(sxx))
    return SlopeFit(slope, se, slope - z * se, slope + z * se)
