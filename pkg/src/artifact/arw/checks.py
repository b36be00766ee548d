"""Order-invariance and monotonicity checks, plus the continuous-time driver."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError
from ..sampling import ExponentialLaw, SeededStream, sample_exponential
from .engine import DEFAULT_STEP_CAP, stabilize
from .stacks import InsertedSleep, Stacks
from .state import (ArwState, InsertSleep, LabelPolicy, PassifyParticle, RemoveParticle,
                    apply_step)


@dataclass
class AbelianReport:
    equal: bool
    signatures: list[tuple]
    steps: list[int]
    counterexample: tuple[int, int] | None = None


def check_abelian(
    state: ArwState,
    stacks: Stacks,
    policies: list[LabelPolicy],
    step_cap: int = DEFAULT_STEP_CAP,
) -> AbelianReport:
    """Stabilize under each policy and compare (j, R, final occupation)."""
    sigs, steps = [], []
    for pol in policies:
        final, n = stabilize(state, stacks, pol, step_cap)
        sigs.append(final.signature())
        steps.append(n)
    for i in range(1, len(sigs)):
        if sigs[i] != sigs[0]:
            return AbelianReport(False, sigs, steps, (0, i))
    return AbelianReport(True, sigs, steps)


def terminal_signatures(state: ArwState, stacks: Stacks, max_states: int = 200_000) -> set[tuple] | None:
    """Every stable outcome reachable under any order of legal moves.

    Depth-first search over all choices of which active particle moves next,
    with memoization on the full state. Returns None if more than
    ``max_states`` distinct states are reachable.
    """
    def key(st: ArwState):
        return (st.positions.tobytes(), st.active.tobytes(), tuple(sorted(st.j.items())))

    seen = {key(state)}
    todo = [state]
    out: set[tuple] = set()
    while todo:
        st = todo.pop()
        movers = np.flatnonzero(st.active)
        if movers.size == 0:
            out.add(st.signature())
            continue
        for n in movers:
            nxt = st.copy()
            apply_step(nxt, stacks, int(n))
            k = key(nxt)
            if k not in seen:
                if len(seen) >= max_states:
                    return None
                seen.add(k)
                todo.append(nxt)
    return out


@dataclass
class MonotoneReport:
    r_ok: bool
    j_ok: bool
    R: dict[int, int]
    R_perturbed: dict[int, int]
    j: dict[int, int]
    j_perturbed: dict[int, int]
    violations: list[int] = field(default_factory=list)


def perturb(state: ArwState, stacks: Stacks, perturbation) -> tuple[ArwState, Stacks]:
    """Apply one of the dominated-configuration perturbations."""
    if isinstance(perturbation, RemoveParticle):
        n = perturbation.n
        if not 0 <= n < state.m:
            raise ParameterError(f"no particle {n}")
        keep = np.arange(state.m) != n
        return ArwState(state.positions[keep], state.active[keep], state.j, state.R, state.M), stacks
    if isinstance(perturbation, PassifyParticle):
        n = perturbation.n
        if not 0 <= n < state.m:
            raise ParameterError(f"no particle {n}")
        out = state.copy()
        out.active[n] = False
        return out, stacks
    if isinstance(perturbation, InsertSleep):
        return state.copy(), InsertedSleep(stacks, perturbation.site, perturbation.index)
    raise ParameterError(f"unknown perturbation {perturbation!r}")


def check_monotone(
    state: ArwState,
    stacks: Stacks,
    perturbation,
    step_cap: int = DEFAULT_STEP_CAP,
) -> MonotoneReport:
    """Compare odometers of a configuration and a dominated perturbation.

    The verdict ``r_ok`` is the pointwise bound R'_x <= R_x. ``j_ok``
    compares instruction counters with an inserted sleep, when burned,
    discounted.
    """
    base, _ = stabilize(state, stacks, None, step_cap)
    st2, stk2 = perturb(state, stacks, perturbation)
    pert, _ = stabilize(st2, stk2, None, step_cap)
    j2 = dict(pert.j)
    if isinstance(perturbation, InsertSleep) and j2.get(perturbation.site, 0) >= perturbation.index:
        j2[perturbation.site] -= 1
    sites = set(base.R) | set(pert.R)
    bad = sorted(x for x in sites if pert.Rx(x) > base.Rx(x))
    j_ok = all(j2.get(x, 0) <= base.jx(x) for x in set(j2) | set(base.j))
    return MonotoneReport(not bad, j_ok, base.R, pert.R, base.j, j2, bad)


@dataclass
class Trajectory:
    times: np.ndarray
    states: list[ArwState]

    def odometer_at(self, x: int) -> np.ndarray:
        """R_x^t sampled at each recorded event time."""
        return np.array([s.Rx(x) for s in self.states], dtype=np.int64)


def stabilize_timed(
    state: ArwState,
    stacks: Stacks,
    lam: float,
    stream: SeededStream,
    t_horizon: float,
) -> Trajectory:
    """Continuous-time embedded chain up to ``t_horizon``.

    Rings arrive at total rate m(1+lam) with a uniform label each; rings on
    Passive particles change nothing and are not recorded. Recording stops
    at the horizon or once the configuration is stable.
    """
    if not lam > 0:
        raise ParameterError("sleep rate must be positive")
    st = state.copy()
    times: list[float] = []
    states: list[ArwState] = []
    if st.m == 0:
        return Trajectory(np.zeros(0), states)
    rate = ExponentialLaw(st.m * (1.0 + lam))
    occ = Counter(st.positions.tolist())
    t = 0.0
    while not st.is_stable():
        t += sample_exponential(stream, rate)
        if t > t_horizon:
            break
        n = int(stream.integers(st.m))
        if not st.active[n]:
            continue
        apply_step(st, stacks, n, occ)
        times.append(t)
        states.append(st.copy())
    return Trajectory(np.array(times), states)
