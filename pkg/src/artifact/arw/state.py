"""ARW configurations, label policies and the reference step rule.

Particle indices are 0-based. Sites are integers on the line; the box
radius ``M`` only records where the initial particles were placed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ParameterError
from ..sampling import PoissonLaw, SeededStream, sample_poisson
from .stacks import EXHAUSTED, SLEEP, Stacks


@dataclass
class ArwState:
    positions: np.ndarray
    active: np.ndarray
    j: dict[int, int] = field(default_factory=dict)
    R: dict[int, int] = field(default_factory=dict)
    M: int = 0

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.int64).copy()
        self.active = np.asarray(self.active, dtype=bool).copy()
        if self.positions.shape != self.active.shape or self.positions.ndim != 1:
            raise ParameterError("positions and active flags must be equal-length vectors")
        self.j = {int(x): int(v) for x, v in self.j.items() if v}
        self.R = {int(x): int(v) for x, v in self.R.items() if v}

    @classmethod
    def from_particles(cls, particles: Sequence[tuple[int, bool]], M: int = 0) -> "ArwState":
        """Build from (position, is_active) pairs."""
        pos = [p for p, _ in particles]
        act = [a for _, a in particles]
        return cls(np.array(pos, dtype=np.int64), np.array(act, dtype=bool), M=M)

    @property
    def m(self) -> int:
        return len(self.positions)

    def copy(self) -> "ArwState":
        return ArwState(self.positions, self.active, dict(self.j), dict(self.R), self.M)

    def occupation(self) -> dict[int, int]:
        return dict(sorted(Counter(self.positions.tolist()).items()))

    def is_stable(self) -> bool:
        return not self.active.any()

    def jx(self, x: int) -> int:
        return self.j.get(int(x), 0)

    def Rx(self, x: int) -> int:
        return self.R.get(int(x), 0)

    def signature(self) -> tuple:
        """Order-invariant summary compared by the abelian check."""
        return (
            tuple(sorted(self.j.items())),
            tuple(sorted(self.R.items())),
            tuple(self.occupation().items()),
        )

    def to_dict(self) -> dict:
        return {
            "M": self.M,
            "particles": [
                {"position": int(p), "state": "Active" if a else "Passive"}
                for p, a in zip(self.positions, self.active)
            ],
            "j": {str(k): v for k, v in sorted(self.j.items())},
            "R": {str(k): v for k, v in sorted(self.R.items())},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ArwState":
        parts = data["particles"]
        return cls(
            np.array([p["position"] for p in parts], dtype=np.int64),
            np.array([p["state"] == "Active" for p in parts], dtype=bool),
            {int(k): v for k, v in data.get("j", {}).items()},
            {int(k): v for k, v in data.get("R", {}).items()},
            int(data.get("M", 0)),
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ArwState):
            return NotImplemented
        return (
            np.array_equal(self.positions, other.positions)
            and np.array_equal(self.active, other.active)
            and self.j == other.j
            and self.R == other.R
            and self.M == other.M
        )


def init_state(mu: float, M: int, stream: SeededStream) -> ArwState:
    """i.i.d. Poisson(mu) active particles on each site of [-M, M]."""
    if M < 0:
        raise ParameterError(f"box radius must be nonnegative, got {M}")
    counts = sample_poisson(stream, PoissonLaw(mu), size=2 * M + 1)
    sites = np.arange(-M, M + 1, dtype=np.int64)
    pos = np.repeat(sites, counts)
    return ArwState(pos, np.ones(len(pos), dtype=bool), M=M)


@dataclass(frozen=True)
class LabelPolicy:
    """How the next particle label is chosen.

    ``uniform`` draws labels from ``stream``; ``custom`` replays ``sequence``
    and then continues round-robin so every label keeps recurring.
    """

    mode: str
    sequence: tuple[int, ...] = ()
    stream: SeededStream | None = None

    MODES = ("uniform", "round_robin", "lowest_active", "custom")

    def __post_init__(self):
        if self.mode not in self.MODES:
            raise ParameterError(f"unknown label policy {self.mode!r}")
        if self.mode == "uniform" and self.stream is None:
            raise ParameterError("uniform label policy needs a stream")

    @classmethod
    def uniform(cls, stream: SeededStream) -> "LabelPolicy":
        return cls("uniform", stream=stream)

    @classmethod
    def round_robin(cls) -> "LabelPolicy":
        return cls("round_robin")

    @classmethod
    def lowest_active(cls) -> "LabelPolicy":
        return cls("lowest_active")

    @classmethod
    def custom(cls, sequence: Sequence[int]) -> "LabelPolicy":
        return cls("custom", sequence=tuple(int(n) for n in sequence))


def apply_step(state: ArwState, stacks: Stacks, n: int, occ: Counter | None = None) -> None:
    """In-place step on particle ``n``; ``occ`` is an optional occupation cache."""
    if not 0 <= n < state.m:
        raise ParameterError(f"particle index {n} out of range 0..{state.m - 1}")
    if not state.active[n]:
        return
    if occ is None:
        occ = Counter(state.positions.tolist())
    x = int(state.positions[n])
    k = state.j.get(x, 0) + 1
    code = stacks.item(x, k)
    if code == EXHAUSTED:
        raise ParameterError(f"stack at site {x} exhausted at index {k}")
    state.j[x] = k
    if code == SLEEP:
        if occ[x] == 1:
            state.active[n] = False
        return
    y = x + code
    state.R[x] = state.R.get(x, 0) + 1
    state.positions[n] = y
    occ[x] -= 1
    occ[y] += 1
    if occ[y] > 1:
        state.active[state.positions == y] = True


def step(state: ArwState, stacks: Stacks, n: int) -> ArwState:
    """Return the state after applying label ``n`` once (the n.X update)."""
    out = state.copy()
    apply_step(out, stacks, n)
    return out


@dataclass(frozen=True)
class RemoveParticle:
    n: int


@dataclass(frozen=True)
class PassifyParticle:
    n: int


@dataclass(frozen=True)
class InsertSleep:
    site: int
    index: int
