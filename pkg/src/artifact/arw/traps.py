"""Sweep-and-trap fixation certificate.

Both phases run under the all-jumps coupling: sleeps are ignored and the
counters j_x index the jump subsequence F~_x. A successful construction
yields trap pairs (x, k); putting back exactly one sleep in front of the
k-th jump at each trap site gives a dominating configuration whose
stabilization, under the recorded label schedule, leaves every particle
asleep at its trap without the origin being touched after the sweep.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ..errors import NotStabilized, ParameterError
from ..sampling import PoissonLaw, SeededStream, sample_poisson
from .engine import DEFAULT_STEP_CAP, run_schedule, stabilize
from .stacks import RandomStacks, Reflected, Stacks, TrapStacks
from .state import ArwState, init_state

SYMMETRIC, BIASED_RIGHT = "symmetric", "biased_right"


_FAR = -(2**62)
_DONE, _CAP, _NEED_SITE, _NEED_DEPTH = range(4)


@njit(cache=True, nogil=True)
def _walk(tape, jc, lo, x, a, b, cap):
    """Follow jumps from ``x`` while a < x < b; stops early to ask for a bigger tape."""
    W, D = tape.shape
    steps = 0
    while a < x < b:
        if steps >= cap:
            return x, steps, _CAP
        s = x - lo
        if s < 0 or s >= W:
            return x, steps, _NEED_SITE
        k = jc[s]
        if k >= D:
            return x, steps, _NEED_DEPTH
        jc[s] = k + 1
        x += tape[s, k]
        steps += 1
    return x, steps, _DONE


class _JumpTape:
    """Dense window of F~_{x,k} and D_{x,k} with the jump counters j_x.

    Under the all-jumps coupling every burned instruction is a jump, so one
    counter per site serves as both j_x and R_x. The window and depth grow on
    demand.
    """

    def __init__(self, stacks: Stacks, lo: int, hi: int, depth: int = 256):
        self.stacks = stacks
        self.lo, self.hi, self.depth = lo, hi, depth
        self.jc = np.zeros(hi - lo + 1, dtype=np.int64)
        self._fill()

    def _fill(self):
        W = self.hi - self.lo + 1
        self.tape = np.empty((W, self.depth), dtype=np.int64)
        self.gaps = np.empty((W, self.depth), dtype=np.int64)
        for s in range(W):
            self.tape[s], self.gaps[s] = self.stacks.jump_view(self.lo + s, self.depth)

    def _grow(self, status: int, x: int):
        if status == _NEED_DEPTH:
            self.depth *= 2
        else:
            grow = max(16, (self.hi - self.lo) // 2)
            old_lo = self.lo
            if x < self.lo:
                self.lo -= grow
            else:
                self.hi += grow
            jc = np.zeros(self.hi - self.lo + 1, dtype=np.int64)
            jc[old_lo - self.lo: old_lo - self.lo + len(self.jc)] = self.jc
            self.jc = jc
        self._fill()

    def walk(self, x: int, a: int, b: int, cap: int) -> tuple[int, int]:
        """Walk from ``x`` until it leaves (a, b); returns (end, steps)."""
        total = 0
        while True:
            x, steps, status = _walk(self.tape, self.jc, self.lo, x, a, b, cap - total)
            total += int(steps)
            x = int(x)
            if status in (_DONE, _CAP):
                return x, total
            self._grow(status, x)

    def jx(self, x: int) -> int:
        s = x - self.lo
        return int(self.jc[s]) if 0 <= s < len(self.jc) else 0

    def sleepy(self, lo: int, hi: int) -> np.ndarray:
        """Sites in [lo, hi) whose last burned jump had a positive sleep gap."""
        if hi <= lo:
            return np.zeros(0, dtype=np.int64)
        sites = np.arange(lo, hi)
        s = sites - self.lo
        inside = (s >= 0) & (s < len(self.jc))
        s, sites = s[inside], sites[inside]
        k = self.jc[s]
        hit = k >= 1
        hit[hit] = self.gaps[s[hit], k[hit] - 1] > 0
        return sites[hit]

    def counters(self) -> dict[int, int]:
        nz = np.flatnonzero(self.jc)
        return {self.lo + int(s): int(self.jc[s]) for s in nz}


def _bias(stacks: Stacks, p: float | None) -> float:
    if p is None:
        p = getattr(stacks, "p", 0.5)
    return float(p)


@dataclass
class SweepResult:
    initial: ArwState
    state: ArwState
    r0: int
    schedule: list[int]
    K: int
    rule: str
    steps: int


def sweep(
    state: ArwState,
    stacks: Stacks,
    K: int,
    rule: str = SYMMETRIC,
    p: float | None = None,
    step_cap: int = DEFAULT_STEP_CAP,
) -> SweepResult:
    """Walk the particles inside the window one at a time to its boundary.

    Symmetric: particles with |x| < K walk until |x| = K. Biased right:
    particles with -K <= x < K walk until they hit +K.
    """
    if K < 1:
        raise ParameterError("sweep radius must be at least 1")
    if rule not in (SYMMETRIC, BIASED_RIGHT):
        raise ParameterError(f"unknown direction rule {rule!r}")
    if rule == BIASED_RIGHT and _bias(stacks, p) <= 0.5:
        raise ParameterError("biased-right sweep needs p > 1/2; reflect the instance for p < 1/2")
    if state.j or state.R:
        raise ParameterError("sweep expects fresh counters")
    if not state.active.all():
        raise ParameterError("sweep expects every particle Active")

    st = state.copy()
    lo = min(int(st.positions.min()) if st.m else 0, -K) - 1
    tape = _JumpTape(stacks, lo, K + 1)
    schedule: list[int] = []
    steps = 0
    for n in range(st.m):
        x = int(st.positions[n])
        if rule == SYMMETRIC:
            if abs(x) >= K:
                continue
            a = -K
        else:
            if not -K <= x < K:
                continue
            a = _FAR
        x, used = tape.walk(x, a, K, step_cap - steps)
        schedule.extend([n] * used)
        steps += used
        st.positions[n] = x
        if steps >= step_cap and (a < x < K):
            raise NotStabilized(step_cap, st)
    st.j = tape.counters()
    st.R = dict(st.j)
    return SweepResult(state.copy(), st, st.Rx(0), schedule, K, rule, steps)


@dataclass
class TrapCertificate:
    success: bool
    K: int
    swept_interval: tuple[int, int]
    r0: int
    b0: int
    box: int
    traps: list[tuple[int, int]] = field(default_factory=list)
    trap_particles: list[int] = field(default_factory=list)
    barriers: list[tuple[int, int]] = field(default_factory=list)
    failed_stage: int | None = None
    sweep_schedule: list[int] = field(default_factory=list)
    trap_schedule: list[int] = field(default_factory=list)
    replay_ok: bool | None = None
    replay_r0: int | None = None
    replay_problems: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "K": self.K,
            "swept_interval": list(self.swept_interval),
            "r0": self.r0,
            "b0": self.b0,
            "box": self.box,
            "traps": [list(t) for t in self.traps],
            "trap_particles": self.trap_particles,
            "barriers": [list(b) for b in self.barriers],
            "failed_stage": self.failed_stage,
            "replay_ok": self.replay_ok,
            "replay_r0": self.replay_r0,
        }


def build_traps(
    swept: SweepResult,
    stacks: Stacks,
    lam: float,
    box: int | None = None,
    step_cap: int = DEFAULT_STEP_CAP,
    replay: bool = True,
) -> TrapCertificate:
    """Barrier/trap loop over right-side then left-side particles.

    Right-side particles are processed by increasing position, left-side ones
    by decreasing position. ``box`` plays the role of the box radius in the
    outer barrier; it defaults to the largest of K and every particle's
    distance from the origin.
    """
    if not lam > 0:
        raise ParameterError("sleep rate must be positive")
    st = swept.state.copy()
    K = swept.K
    if st.m and (np.abs(st.positions) < K).any():
        raise ParameterError("input is not swept: a particle lies strictly inside (-K, K)")
    far = int(np.abs(st.positions).max()) if st.m else 0
    box = max(K, far, box or 0)
    b0 = math.ceil((3.0 + 1.0 / lam) * box)
    cert = TrapCertificate(False, K, (-K, K), swept.r0, b0, box,
                           sweep_schedule=list(swept.schedule))
    lo_seen = min([-b0] + list(st.j) + st.positions.tolist())
    hi_seen = max([b0] + list(st.j) + st.positions.tolist())
    tape = _JumpTape(stacks, lo_seen, hi_seen)
    for x, k in st.j.items():
        tape.jc[x - tape.lo] = k
    steps = 0

    def walk(n: int, lo: int, hi: int) -> int:
        nonlocal steps
        end, used = tape.walk(int(st.positions[n]), lo, hi, step_cap - steps)
        cert.trap_schedule.extend([n] * used)
        steps += used
        st.positions[n] = end
        if lo < end < hi:
            raise NotStabilized(step_cap, st)
        return end

    pos = st.positions.tolist()
    right = sorted((n for n in range(st.m) if pos[n] > 0), key=lambda n: (pos[n], n))
    left = sorted((n for n in range(st.m) if pos[n] < 0), key=lambda n: (-pos[n], n))

    stage = 0
    a, b = 0, b0
    for n in right:
        stage += 1
        start = pos[n]
        if walk(n, a, b) == a:
            cands = tape.sleepy(a + 1, start)
            trap = int(cands.min()) if cands.size else None
        else:
            cands = tape.sleepy(box + 1, b)
            trap = int(cands.max()) if cands.size else None
        if trap is None:
            cert.failed_stage = stage
            return cert
        if st.positions[n] == a:
            a = trap
        else:
            b = trap
        cert.traps.append((trap, tape.jx(trap)))
        cert.trap_particles.append(n)
        cert.barriers.append((a, b))

    a, b = -b0, 0
    for n in left:
        stage += 1
        start = pos[n]
        if walk(n, a, b) == b:
            cands = tape.sleepy(start + 1, b)
            trap = int(cands.max()) if cands.size else None
        else:
            cands = tape.sleepy(a + 1, -box)
            trap = int(cands.min()) if cands.size else None
        if trap is None:
            cert.failed_stage = stage
            return cert
        if st.positions[n] == b:
            b = trap
        else:
            a = trap
        cert.traps.append((trap, tape.jx(trap)))
        cert.trap_particles.append(n)
        cert.barriers.append((a, b))

    cert.success = True
    if replay:
        replay_certificate(cert, swept, stacks)
    return cert


def replay_certificate(cert: TrapCertificate, swept: SweepResult, stacks: Stacks) -> bool:
    """Stabilize the trap configuration under the certified schedule and check it."""
    problems: list[str] = []
    trapped = TrapStacks(stacks, cert.traps)
    mid = run_schedule(swept.initial, trapped, cert.sweep_schedule)
    if mid.Rx(0) != cert.r0:
        problems.append(f"sweep phase R_0 {mid.Rx(0)} != {cert.r0}")
    if not np.array_equal(mid.positions, swept.state.positions):
        problems.append("sweep phase positions differ from the all-jumps sweep")
    end = run_schedule(mid, trapped, cert.trap_schedule)
    if end.active.any():
        problems.append(f"{int(end.active.sum())} particle(s) still Active after the schedule")
    for n, (x, _) in zip(cert.trap_particles, cert.traps):
        if int(end.positions[n]) != x:
            problems.append(f"particle {n} ended at {int(end.positions[n])}, trap at {x}")
    if end.Rx(0) != cert.r0:
        problems.append(f"origin revisited: R_0 {end.Rx(0)} != {cert.r0}")
    cert.replay_r0 = end.Rx(0)
    cert.replay_problems = problems
    cert.replay_ok = not problems
    return cert.replay_ok


def escape_radius(mu: float, lam: float, p: float, eps: float) -> int:
    """Smallest k keeping a right-biased cloud off the origin w.p. >= 1 - eps.

    Poisson(2k mu) walkers at k plus Poisson(mu) at each site beyond; a walker
    started at y ever reaches 0 with probability r**y, r = q/p, so the number
    that do is Poisson(mu (2k r**k + r**(k+1)/(1-r))).
    """
    r = (1.0 - p) / p
    target = -math.log1p(-eps)
    k = 1
    while mu * (2 * k * r**k + r ** (k + 1) / (1.0 - r)) > target:
        k += 1
    return k


def choose_K(
    mu: float,
    lam: float,
    stream: SeededStream,
    eps: float = 0.01,
    trials: int = 10_000,
    p: float = 0.5,
) -> int:
    """Sweep radius from the particles-versus-traps crossing criterion.

    Smallest K with estimated P(S'_{n+1} > S_n for some n >= K) < eps, where
    S_n sums Bernoulli(lam/(1+lam)) trap indicators and S'_n sums Poisson(mu)
    particle counts. For p > 1/2 the escape radius is folded in as a maximum.
    """
    theta = lam / (1.0 + lam)
    if not 0 <= mu < theta:
        raise ParameterError(f"need mu < lam/(1+lam) = {theta:.6g} for a finite K, got mu={mu}")
    if not 0 < eps < 1:
        raise ParameterError("eps must lie in (0, 1)")
    drift = theta - mu
    var = theta * (1.0 - theta) + mu
    horizon = int(min(max(40.0 * var / drift**2 + 200.0, 400.0), 200_000))
    need = np.zeros(trials, dtype=np.int64)
    chunk = max(1, min(trials, 4_000_000 // horizon))
    for c0 in range(0, trials, chunk):
        c = min(chunk, trials - c0)
        sub = stream.spawn(c0)
        traps = (sub.spawn(0).uniform((c, horizon)) <= theta).astype(np.int32)
        parts = sample_poisson(sub.spawn(1), PoissonLaw(mu), size=(c, horizon + 1)).astype(np.int32)
        S = np.concatenate([np.zeros((c, 1), np.int32), np.cumsum(traps, axis=1)], axis=1)
        Sp = np.cumsum(parts, axis=1)
        bad = Sp > S  # bad[:, n] <=> S'_{n+1} > S_n
        last = horizon - np.argmax(bad[:, ::-1], axis=1)
        # a trial needs K > last violating n; K >= need clears it
        need[c0:c0 + c] = np.where(bad.any(axis=1), last + 1, 0)
    K = 1
    while (need > K).mean() >= eps:
        K += 1
    if p > 0.5:
        K = max(K, escape_radius(mu, lam, p, eps))
    return K


@dataclass
class Certification:
    certificate: TrapCertificate
    sweep: SweepResult
    real_r0: int | None = None


def certify(
    mu: float,
    lam: float,
    K: int,
    stream: SeededStream,
    p: float = 0.5,
    box: int | None = None,
    check_real: bool = True,
    step_cap: int = DEFAULT_STEP_CAP,
) -> Certification:
    """One full trial: sample a box, sweep, build traps, replay.

    With ``check_real`` the untouched configuration is also stabilized and its
    R_0 recorded; on a successful certificate it can never exceed the
    certified sweep count.
    """
    box = K if box is None else box
    state = init_state(mu, box, stream.spawn(0))
    stacks: Stacks = RandomStacks(stream.spawn(1), lam, p)
    if p < 0.5:
        state = ArwState(-state.positions, state.active, M=state.M)
        stacks = Reflected(stacks)
        p = 1.0 - p
    rule = SYMMETRIC if p == 0.5 else BIASED_RIGHT
    sw = sweep(state, stacks, K, rule, p=p, step_cap=step_cap)
    cert = build_traps(sw, stacks, lam, box=box, step_cap=step_cap)
    out = Certification(cert, sw)
    if check_real:
        final, _ = stabilize(state, stacks, None, step_cap)
        out.real_r0 = final.Rx(0)
    return out
