from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from artifact.arw import (EXHAUSTED, LEFT, RIGHT, SLEEP, ExplicitStacks, InsertedSleep, JumpsOnly,
                          RandomStacks, Reflected, TrapStacks, factorize, instruction_code,
                          instruction_name, unfactorize)
from artifact.errors import ParameterError
from artifact.sampling import SeededStream


def proportion_ok(hits, n, p, k=3.0):
    return abs(hits / n - p) <= k * math.sqrt(p * (1 - p) / n)


@pytest.mark.parametrize("lam,p", [(1.0, 0.5), (0.5, 0.7), (3.0, 0.2)])
def test_instruction_frequencies(lam, p):
    stacks = RandomStacks(SeededStream(1), lam, p)
    items = np.concatenate([stacks.items(x, 2000) for x in range(-10, 10)])
    n = len(items)
    assert proportion_ok(int((items == LEFT).sum()), n, (1 - p) / (1 + lam))
    assert proportion_ok(int((items == RIGHT).sum()), n, p / (1 + lam))
    assert proportion_ok(int((items == SLEEP).sum()), n, lam / (1 + lam))


def test_sleep_gaps_positive_with_sleep_probability():
    lam = 1.5
    stacks = RandomStacks(SeededStream(2), lam)
    gaps = np.concatenate([stacks.jump_view(x, 500)[1] for x in range(40)])
    assert proportion_ok(int((gaps > 0).sum()), len(gaps), lam / (1 + lam))


def test_jump_signs_have_bias_p():
    stacks = RandomStacks(SeededStream(3), 1.0, 0.7)
    jumps = np.concatenate([stacks.jump_view(x, 500)[0] for x in range(40)])
    assert proportion_ok(int((jumps == RIGHT).sum()), len(jumps), 0.7)


def test_stacks_do_not_depend_on_read_order():
    a = RandomStacks(SeededStream(4), 1.0)
    b = RandomStacks(SeededStream(4), 1.0)
    first = [a.items(x, 300).copy() for x in (3, -2, 0)]
    b.items(0, 1000)
    b.items(-2, 5)
    assert all(np.array_equal(f, b.items(x, 300)) for f, x in zip(first, (3, -2, 0)))


@given(st.lists(st.sampled_from([LEFT, SLEEP, RIGHT]), max_size=60))
def test_factorization_round_trips(items):
    jumps, gaps, trailing = factorize(items)
    assert np.array_equal(unfactorize(jumps, gaps, trailing), np.array(items, dtype=np.int8))
    assert len(jumps) + gaps.sum() + trailing == len(items)


def test_explicit_stacks_accept_names_and_report_exhaustion():
    s = ExplicitStacks({0: ["JumpLeft", "S", "+1"]})
    assert s.items(0, 4).tolist() == [LEFT, SLEEP, RIGHT, EXHAUSTED]
    assert instruction_name(instruction_code("R")) == "JumpRight"
    with pytest.raises(ParameterError):
        instruction_code("up")


def test_explicit_tail_continues_a_prefix():
    tail = RandomStacks(SeededStream(5), 1.0)
    s = ExplicitStacks({0: ["S", "S"]}, tail=tail)
    assert np.array_equal(s.items(0, 10)[2:], tail.items(0, 10)[2:])


def test_inserted_sleep_shifts_the_stack():
    base = ExplicitStacks({0: ["R", "L"]})
    s = InsertedSleep(base, 0, 2)
    assert s.items(0, 3).tolist() == [RIGHT, SLEEP, LEFT]
    with pytest.raises(ParameterError):
        InsertedSleep(base, 0, 0)


def test_jumps_only_and_trap_views():
    base = ExplicitStacks({0: ["S", "R", "S", "S", "L", "R"]})
    assert JumpsOnly(base).items(0, 3).tolist() == [RIGHT, LEFT, RIGHT]
    assert TrapStacks(base, [(0, 2)]).items(0, 4).tolist() == [RIGHT, SLEEP, LEFT, RIGHT]


def test_reflection_swaps_directions():
    base = ExplicitStacks({2: ["R", "S", "L"]})
    assert Reflected(base).items(-2, 3).tolist() == [LEFT, SLEEP, RIGHT]


def test_random_stacks_validate_parameters():
    with pytest.raises(ParameterError):
        RandomStacks(SeededStream(1), 0.0)
    with pytest.raises(ParameterError):
        RandomStacks(SeededStream(1), 1.0, 1.5)
