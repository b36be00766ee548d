"""Per-site instruction stacks and their (jump subsequence, sleep gap) view.

Instructions are stored as int8 codes: -1 jump left, +1 jump right,
0 sleep. Finite explicit stacks pad with EXHAUSTED so the engine can report
running off the end instead of inventing instructions.
"""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np

from ..errors import ParameterError
from ..sampling import SeededStream, zigzag

LEFT, SLEEP, RIGHT = -1, 0, 1
EXHAUSTED = 2

_NAMES = {LEFT: "JumpLeft", SLEEP: "Sleep", RIGHT: "JumpRight"}
_CODES = {
    "L": LEFT, "JumpLeft": LEFT, "-1": LEFT, -1: LEFT,
    "S": SLEEP, "Sleep": SLEEP, "0": SLEEP, 0: SLEEP,
    "R": RIGHT, "JumpRight": RIGHT, "+1": RIGHT, "1": RIGHT, 1: RIGHT,
}


def instruction_code(item) -> int:
    try:
        return _CODES[item]
    except KeyError:
        raise ParameterError(f"unknown instruction {item!r}") from None


def instruction_name(code: int) -> str:
    return _NAMES[int(code)]


def factorize(items: Iterable[int]) -> tuple[np.ndarray, np.ndarray, int]:
    """Split a stack prefix into jumps F~_k, gaps D_k and trailing sleeps.

    D_k counts the sleeps strictly between jump k-1 and jump k. Sleeps after
    the last jump of the prefix are returned separately so the split is a
    bijection on finite prefixes.
    """
    arr = np.asarray(items, dtype=np.int8).ravel()
    where = np.flatnonzero(arr != SLEEP)
    gaps = np.diff(np.concatenate([[-1], where])) - 1
    trailing = len(arr) - 1 - where[-1] if where.size else len(arr)
    return arr[where], gaps.astype(np.int64), int(trailing)


def unfactorize(jumps, gaps, trailing: int = 0) -> np.ndarray:
    jumps = np.asarray(jumps, dtype=np.int8)
    gaps = np.asarray(gaps, dtype=np.int64)
    where = np.cumsum(gaps + 1) - 1
    out = np.zeros(int(where[-1]) + 1 + trailing if where.size else trailing, dtype=np.int8)
    out[where] = jumps
    return out


class Stacks:
    """Read-only access to the instruction stack of every site."""

    def items(self, x: int, n: int) -> np.ndarray:
        """The first ``n`` instructions at site ``x`` (index 0 is F_{x,1})."""
        raise NotImplementedError

    def item(self, x: int, j: int) -> int:
        """F_{x,j} with a 1-based index j, as stacks are usually written."""
        return int(self.items(x, j)[j - 1])

    def jump_view(self, x: int, k: int) -> tuple[np.ndarray, np.ndarray]:
        """First ``k`` jumps at ``x`` and the sleep gap in front of each.

        Stacks never change once read, so views are memoized per site.
        """
        memo = self.__dict__.setdefault("_views", {})
        have = memo.get(x)
        if have is not None and len(have[0]) >= k:
            return have[0][:k], have[1][:k]
        n = max(2 * k, 8)
        while True:
            block = self.items(x, n)
            exhausted = np.flatnonzero(block == EXHAUSTED)
            usable = block[: exhausted[0]] if exhausted.size else block
            jumps, gaps, _ = factorize(usable)
            if len(jumps) >= k:
                memo[x] = (jumps, gaps)
                return jumps[:k], gaps[:k]
            if exhausted.size:
                raise ParameterError(f"stack at site {x} holds fewer than {k} jumps")
            n *= 2


class RandomStacks(Stacks):
    """Lazily sampled i.i.d. stacks, memoized per site.

    Site ``x`` reads from ``stream.spawn(zigzag(x))`` in fixed-size blocks, so
    F_{x,j} depends only on (stream, x, j) no matter which order sites are
    touched in.
    """

    BLOCK = 256

    def __init__(self, stream: SeededStream, lam: float, p: float = 0.5):
        if not lam > 0:
            raise ParameterError(f"sleep rate must be positive, got {lam}")
        if not 0.0 <= p <= 1.0:
            raise ParameterError(f"jump bias must lie in [0,1], got {p}")
        self.stream = stream
        self.lam = float(lam)
        self.p = float(p)
        self._left = (1.0 - self.p) / (1.0 + self.lam)
        self._jump = 1.0 / (1.0 + self.lam)
        self._memo: dict[int, np.ndarray] = {}
        self._streams: dict[int, SeededStream] = {}

    def _extend(self, x: int, n: int) -> np.ndarray:
        have = self._memo.get(x)
        if have is not None and len(have) >= n:
            return have
        s = self._streams.get(x)
        if s is None:
            s = self._streams[x] = self.stream.spawn(zigzag(x))
        parts = [have] if have is not None else []
        size = 0 if have is None else len(have)
        while size < n:
            u = s.uniform(self.BLOCK)
            codes = np.where(u <= self._left, LEFT, np.where(u <= self._jump, RIGHT, SLEEP))
            parts.append(codes.astype(np.int8))
            size += self.BLOCK
        arr = np.concatenate(parts)
        self._memo[x] = arr
        return arr

    def items(self, x: int, n: int) -> np.ndarray:
        return self._extend(int(x), n)[:n]


class ExplicitStacks(Stacks):
    """Hand-written prefixes, optionally continued by another stack source.

    Beyond a prefix of length L the instruction F_{x,j} (j > L) is read from
    ``tail`` at the same index, so the tail acts as the "..." of a written
    example.
    """

    def __init__(self, prefixes: Mapping[int, Iterable], tail: Stacks | None = None):
        self.prefixes = {
            int(x): np.array([instruction_code(c) for c in seq], dtype=np.int8)
            for x, seq in prefixes.items()
        }
        self.tail = tail

    def items(self, x: int, n: int) -> np.ndarray:
        pre = self.prefixes.get(int(x), np.zeros(0, dtype=np.int8))
        if n <= len(pre):
            return pre[:n]
        if self.tail is None:
            pad = np.full(n - len(pre), EXHAUSTED, dtype=np.int8)
        else:
            pad = self.tail.items(x, n)[len(pre):]
        return np.concatenate([pre, pad])


class InsertedSleep(Stacks):
    """``base`` with one extra Sleep placed at 1-based position ``index`` of ``site``."""

    def __init__(self, base: Stacks, site: int, index: int):
        if index < 1:
            raise ParameterError("insertion index must be at least 1")
        self.base, self.site, self.index = base, int(site), int(index)

    def items(self, x: int, n: int) -> np.ndarray:
        if int(x) != self.site or n < self.index:
            return self.base.items(x, n)
        raw = self.base.items(x, max(n - 1, 0))
        i = self.index - 1
        return np.concatenate([raw[:i], np.array([SLEEP], dtype=np.int8), raw[i:]])[:n]


class JumpsOnly(Stacks):
    """The all-jumps coupling: every sleep gap removed (D' = 0)."""

    def __init__(self, base: Stacks):
        self.base = base
        self._memo: dict[int, np.ndarray] = {}

    def _jumps(self, x: int, k: int) -> np.ndarray:
        try:
            return self.base.jump_view(x, k)[0]
        except ParameterError:
            # a finite stack: keep every jump it has
            n = k
            while True:
                block = self.base.items(x, n)
                end = np.flatnonzero(block == EXHAUSTED)
                if end.size:
                    return factorize(block[: end[0]])[0]
                n *= 2

    def items(self, x: int, n: int) -> np.ndarray:
        x = int(x)
        have = self._memo.get(x)
        if have is None or len(have) < n:
            have = self._memo[x] = self._jumps(x, max(n, 64))
        out = have[:n]
        if len(out) < n:
            out = np.concatenate([out, np.full(n - len(out), EXHAUSTED, dtype=np.int8)])
        return out


class TrapStacks(Stacks):
    """Jump subsequence of ``base`` with one sleep in front of each trapped jump.

    ``traps`` holds pairs (x, k): a single Sleep is placed right before the
    k-th jump at site x, i.e. D''_{x,k} = 1 for trapped pairs and 0 otherwise.
    """

    def __init__(self, base: Stacks, traps: Iterable[tuple[int, int]]):
        self.base = JumpsOnly(base)
        self.traps: dict[int, set[int]] = {}
        for x, k in traps:
            self.traps.setdefault(int(x), set()).add(int(k))

    def items(self, x: int, n: int) -> np.ndarray:
        jumps = self.base.items(x, n)
        ks = self.traps.get(int(x))
        if not ks:
            return jumps
        gaps = np.zeros(len(jumps), dtype=np.int64)
        for k in ks:
            if k <= len(gaps):
                gaps[k - 1] = 1
        return unfactorize(jumps, gaps)[:n]


class Reflected(Stacks):
    """Mirror image x -> -x with jump directions swapped."""

    def __init__(self, base: Stacks):
        self.base = base

    def items(self, x: int, n: int) -> np.ndarray:
        raw = self.base.items(-int(x), n)
        return np.where(raw == EXHAUSTED, raw, -raw).astype(np.int8)
