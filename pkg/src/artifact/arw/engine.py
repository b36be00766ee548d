"""Compiled driver for long stabilization runs.

The kernel works on a dense window of sites [lo, lo + W) with stack prefixes
of depth D. When a particle would leave the window or a site runs past its
materialized prefix, the kernel stops with a NEED status; the wrapper widens
the window or doubles the depth and resumes. All state lives in arrays, so
resuming is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from ..errors import NotStabilized, ParameterError
from .stacks import EXHAUSTED, Stacks
from .state import ArwState, LabelPolicy

STABLE, CAP, R_STOP, LABELS_OUT, NEED_SITE, NEED_DEPTH, RAN_OUT = range(7)
MODE_LABELS, MODE_RR, MODE_LOWEST = 0, 1, 2

# control slots shared between wrapper and kernel
C_CURSOR, C_RR, C_CUR, C_NACTIVE, C_STEPS, C_SITE = range(6)

LABEL_CHUNK = 8192
DEFAULT_STEP_CAP = 10**7


@njit(cache=True, nogil=True)
def _kernel(pos, active, sleeper, occ, jc, odo, stk, lo, mode, labels, ctl, cap, r_stop, origin):
    m = pos.shape[0]
    W = stk.shape[0]
    D = stk.shape[1]
    cursor = ctl[C_CURSOR]
    rr = ctl[C_RR]
    cur = ctl[C_CUR]
    nactive = ctl[C_NACTIVE]
    steps = ctl[C_STEPS]
    status = STABLE
    while True:
        if nactive == 0:
            status = STABLE
            break
        if steps >= cap:
            status = CAP
            break
        if r_stop > 0 and odo[origin] >= r_stop:
            status = R_STOP
            break
        if mode == MODE_LABELS:
            if cursor >= labels.shape[0]:
                status = LABELS_OUT
                break
            n = labels[cursor]
        elif mode == MODE_RR:
            n = rr
        else:
            n = cur
        if not active[n]:
            if mode == MODE_LABELS:
                cursor += 1
            elif mode == MODE_RR:
                rr = (rr + 1) % m
            steps += 1
            continue
        s = pos[n] - lo
        k = jc[s]
        if k >= D:
            status = NEED_DEPTH
            ctl[C_SITE] = pos[n]
            break
        code = stk[s, k]
        if code == EXHAUSTED:
            status = RAN_OUT
            ctl[C_SITE] = pos[n]
            break
        if code != 0:
            t = s + code
            if t < 0 or t >= W:
                status = NEED_SITE
                ctl[C_SITE] = pos[n] + code
                break
        # commit
        if mode == MODE_LABELS:
            cursor += 1
        elif mode == MODE_RR:
            rr = (rr + 1) % m
        steps += 1
        jc[s] = k + 1
        if code == 0:
            if occ[s] == 1:
                active[n] = False
                sleeper[s] = n
                nactive -= 1
                if mode == MODE_LOWEST and nactive > 0:
                    c = n + 1
                    while not active[c]:
                        c += 1
                    cur = c
        else:
            odo[s] += 1
            occ[s] -= 1
            occ[t] += 1
            pos[n] += code
            w = sleeper[t]
            if w >= 0:
                active[w] = True
                sleeper[t] = -1
                nactive += 1
                if mode == MODE_LOWEST and w < cur:
                    cur = w
    ctl[C_CURSOR] = cursor
    ctl[C_RR] = rr
    ctl[C_CUR] = cur
    ctl[C_NACTIVE] = nactive
    ctl[C_STEPS] = steps
    return status


@dataclass
class RunResult:
    state: ArwState
    steps: int
    status: int

    @property
    def stabilized(self) -> bool:
        return self.status == STABLE


class _Labels:
    """Label source for the kernel's array mode."""

    def __init__(self, policy: LabelPolicy, m: int):
        self.policy = policy
        self.m = m
        self.done = False
        if policy.mode == "custom":
            seq = np.array(policy.sequence, dtype=np.int64)
            if seq.size and (seq.min() < 0 or seq.max() >= m):
                raise ParameterError("custom label sequence references a missing particle")
            self.first = seq
        else:
            self.first = None

    def next_chunk(self) -> np.ndarray | None:
        if self.policy.mode == "uniform":
            return self.policy.stream.integers(self.m, size=LABEL_CHUNK).astype(np.int64)
        if self.first is not None:
            chunk, self.first = self.first, None
            return chunk
        return None  # custom sequence exhausted


def _validate(state: ArwState):
    passive = state.positions[~state.active]
    if len(np.unique(passive)) != len(passive):
        raise ParameterError("two Passive particles share a site")


def drive(
    state: ArwState,
    stacks: Stacks,
    policy: LabelPolicy,
    step_cap: int = DEFAULT_STEP_CAP,
    r_stop: int = 0,
    labels_only: bool = False,
) -> RunResult:
    """Run the dynamics; never raises on the cap, reports a status instead.

    ``r_stop`` > 0 stops as soon as the origin odometer reaches it (valid for
    threshold questions since R_0 only grows and its final value does not
    depend on the order). With ``labels_only`` a custom policy applies exactly
    its sequence and stops there.
    """
    if step_cap <= 0:
        raise ParameterError("step cap must be positive")
    _validate(state)
    st = state.copy()
    m = st.m
    if m == 0:
        return RunResult(st, 0, STABLE)

    if policy.mode in ("uniform", "custom"):
        mode = MODE_LABELS
    elif policy.mode == "round_robin":
        mode = MODE_RR
    else:
        mode = MODE_LOWEST
    source = _Labels(policy, m) if mode == MODE_LABELS else None
    labels = source.next_chunk() if source else np.zeros(0, dtype=np.int64)
    if labels is None:
        labels = np.zeros(0, dtype=np.int64)

    ctl = np.zeros(6, dtype=np.int64)
    nact = int(st.active.sum())
    ctl[C_NACTIVE] = nact
    ctl[C_CUR] = int(np.argmax(st.active)) if nact else 0

    lo = min(int(st.positions.min()), 0) - 8
    hi = max(int(st.positions.max()), 0) + 8
    depth = 64
    for x, v in st.j.items():
        depth = max(depth, 2 * v)
        lo, hi = min(lo, x), max(hi, x)

    while True:
        W = hi - lo + 1
        stk = np.empty((W, depth), dtype=np.int8)
        for s in range(W):
            stk[s] = stacks.items(lo + s, depth)
        jc = np.array([st.j.get(lo + s, 0) for s in range(W)], dtype=np.int64)
        odo = np.array([st.R.get(lo + s, 0) for s in range(W)], dtype=np.int64)
        occ = np.zeros(W, dtype=np.int64)
        np.add.at(occ, st.positions - lo, 1)
        sleeper = np.full(W, -1, dtype=np.int64)
        idle = np.flatnonzero(~st.active)
        sleeper[st.positions[idle] - lo] = idle
        pos = st.positions.copy()
        active = st.active.copy()

        while True:
            status = _kernel(pos, active, sleeper, occ, jc, odo, stk, lo, mode, labels,
                             ctl, step_cap, r_stop, -lo)
            if status == LABELS_OUT and not labels_only:
                nxt = source.next_chunk()
                if nxt is None:
                    mode = MODE_RR
                    ctl[C_RR] = 0
                    continue
                labels = nxt
                ctl[C_CURSOR] = 0
                continue
            break

        st.positions, st.active = pos, active
        st.j = {lo + int(s): int(v) for s, v in zip(np.flatnonzero(jc), jc[jc > 0])}
        st.R = {lo + int(s): int(v) for s, v in zip(np.flatnonzero(odo), odo[odo > 0])}
        if status == NEED_SITE:
            grow = max(16, (hi - lo) // 2)
            site = int(ctl[C_SITE])
            if site < lo:
                lo -= grow
            else:
                hi += grow
            continue
        if status == NEED_DEPTH:
            depth *= 2
            continue
        if status == RAN_OUT:
            raise ParameterError(f"finite stack at site {int(ctl[C_SITE])} exhausted")
        return RunResult(st, int(ctl[C_STEPS]), STABLE if status == LABELS_OUT and st.is_stable() else status)


def stabilize(
    state: ArwState,
    stacks: Stacks,
    policy: LabelPolicy | None = None,
    step_cap: int = DEFAULT_STEP_CAP,
) -> tuple[ArwState, int]:
    """Stabilize under ``policy`` (lowest active index by default).

    Returns the first all-Passive state and the number of labels applied.
    Raises NotStabilized when the cap is exhausted.
    """
    res = drive(state, stacks, policy or LabelPolicy.lowest_active(), step_cap)
    if res.status == CAP:
        raise NotStabilized(step_cap, res.state)
    return res.state, res.steps


def run_schedule(state: ArwState, stacks: Stacks, labels) -> ArwState:
    """Apply exactly the given label sequence and return the resulting state."""
    labels = list(labels)
    res = drive(state, stacks, LabelPolicy.custom(labels), step_cap=len(labels) + 1, labels_only=True)
    return res.state
