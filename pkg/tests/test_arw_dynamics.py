from __future__ import annotations

import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st

from artifact.arw import (ArwState, ExplicitStacks, InsertSleep, LabelPolicy, PassifyParticle,
                          RandomStacks, RemoveParticle, apply_step, check_abelian, check_monotone,
                          drive, init_state, run_schedule, stabilize, step, terminal_signatures)
from artifact.arw.checks import stabilize_timed
from artifact.arw.engine import CAP
from artifact.errors import NotStabilized, ParameterError
from artifact.sampling import SeededStream

from conftest import within_se


def two_particle_example():
    state = ArwState.from_particles([(0, True), (0, True)])
    stacks = ExplicitStacks({0: ["Sleep", "JumpRight", "Sleep"], 1: ["Sleep"]})
    return state, stacks


# --- initial configurations ---------------------------------------------------------------

def test_init_state_zero_density_is_empty():
    assert init_state(0.0, 10, SeededStream(1)).m == 0


def test_init_state_count_mean_matches_box_size():
    counts = [init_state(1.0, 50, SeededStream(2, t)).m for t in range(1000)]
    assert within_se(counts, 101.0)


def test_init_state_single_site_empty_probability():
    n = 4000
    empty = sum(init_state(0.5, 0, SeededStream(3, t)).m == 0 for t in range(n))
    p = math.exp(-0.5)
    assert abs(empty / n - p) <= 3 * math.sqrt(p * (1 - p) / n)


def test_init_state_places_active_particles_inside_box_only():
    s = init_state(2.0, 7, SeededStream(4))
    assert s.active.all() and np.abs(s.positions).max() <= 7 and not s.j and not s.R


# --- single steps ------------------------------------------------------------------------

def test_lone_particle_falls_asleep():
    s = step(ArwState.from_particles([(0, True)]), ExplicitStacks({0: ["S"]}), 0)
    assert not s.active[0] and s.positions[0] == 0 and s.jx(0) == 1 and s.Rx(0) == 0


def test_crowded_particle_fails_to_sleep():
    s = step(ArwState.from_particles([(0, True), (0, True)]), ExplicitStacks({0: ["S"]}), 0)
    assert s.active.all() and s.jx(0) == 1 and s.Rx(0) == 0


def test_jump_wakes_sleeping_particle_at_destination():
    s0 = ArwState.from_particles([(0, True), (1, False)])
    s = step(s0, ExplicitStacks({0: ["R"]}), 0)
    assert s.positions.tolist() == [1, 1] and s.active.all()
    assert s.jx(0) == 1 and s.Rx(0) == 1


def test_step_on_passive_particle_changes_nothing():
    s0 = ArwState.from_particles([(0, False)])
    assert step(s0, ExplicitStacks({0: ["R"]}), 0) == s0


def test_step_rejects_missing_particle():
    with pytest.raises(ParameterError):
        step(ArwState.from_particles([(0, True)]), ExplicitStacks({0: ["R"]}), 1)


# --- stabilization -----------------------------------------------------------------------

def test_empty_state_is_already_stable():
    s = ArwState.from_particles([])
    final, steps = stabilize(s, ExplicitStacks({}))
    assert final == s and steps == 0


def test_two_particle_example_final_state():
    state, stacks = two_particle_example()
    final, _ = stabilize(state, stacks)
    assert sorted(final.positions.tolist()) == [0, 1] and not final.active.any()
    assert (final.jx(0), final.jx(1), final.Rx(0), final.Rx(1)) == (3, 1, 1, 0)


def test_two_particle_example_all_orders_agree():
    # brute force over every order of legal moves; frozen outcome
    state, stacks = two_particle_example()
    outcomes = terminal_signatures(state, stacks)
    assert outcomes == {(((0, 3), (1, 1)), ((0, 1),), ((0, 1), (1, 1)))}


def test_single_jump_then_sleep():
    final, _ = stabilize(ArwState.from_particles([(0, True)]), ExplicitStacks({0: ["R"], 1: ["S"]}))
    assert final.positions.tolist() == [1] and not final.active[0]
    assert final.Rx(0) == 1 and final.Rx(1) == 0


def test_step_cap_is_reported_not_truncated():
    state = init_state(1.0, 5, SeededStream(8))
    stacks = RandomStacks(SeededStream(9), 1.0)
    with pytest.raises(NotStabilized) as info:
        stabilize(state, stacks, step_cap=2)
    assert info.value.step_cap == 2
    assert drive(state, stacks, LabelPolicy.lowest_active(), step_cap=2).status == CAP


def test_engine_matches_reference_step_rule():
    for seed in range(30):
        state = init_state(0.8, 4, SeededStream(seed, 0))
        stacks = RandomStacks(SeededStream(seed, 1), 0.7)
        labels = SeededStream(seed, 2).integers(max(state.m, 1), 300).tolist() if state.m else []
        ref = state.copy()
        for n in labels:
            apply_step(ref, stacks, n)
        assert run_schedule(state, stacks, labels) == ref


@pytest.mark.parametrize("policy", ["uniform", "round_robin", "lowest_active"])
def test_policies_reach_the_same_final_counts(policy):
    state = init_state(1.0, 6, SeededStream(5, 0))
    stacks = RandomStacks(SeededStream(5, 1), 1.0)
    pol = {"uniform": LabelPolicy.uniform(SeededStream(5, 2)), "round_robin": LabelPolicy.round_robin(),
           "lowest_active": LabelPolicy.lowest_active()}[policy]
    ref, _ = stabilize(state, stacks)
    final, _ = stabilize(state, stacks, pol)
    assert final.signature() == ref.signature()


def test_custom_policy_continues_after_its_sequence():
    state, stacks = two_particle_example()
    final, _ = stabilize(state, stacks, LabelPolicy.custom([1]))
    assert final.is_stable()


def test_unknown_policy_is_rejected():
    with pytest.raises(ParameterError):
        LabelPolicy("sometimes")


def test_state_json_round_trip():
    state = init_state(1.0, 4, SeededStream(10))
    final, _ = stabilize(state, RandomStacks(SeededStream(11), 1.0))
    assert ArwState.from_dict(final.to_dict()) == final


# --- order invariance and monotonicity ---------------------------------------------------

def random_orders(k, seed):
    return [LabelPolicy.uniform(SeededStream(seed, 100 + i)) for i in range(k)]


def test_two_particle_example_twenty_random_orders():
    state, stacks = two_particle_example()
    assert check_abelian(state, stacks, random_orders(20, 1)).equal


def test_abelian_empty_state():
    assert check_abelian(ArwState.from_particles([]), ExplicitStacks({}), random_orders(3, 2)).equal


def test_abelian_six_particles_fifty_orders():
    rng = np.random.default_rng(3)
    state = ArwState.from_particles([(int(x), True) for x in rng.integers(-5, 6, 6)])
    stacks = RandomStacks(SeededStream(3), 1.0)
    report = check_abelian(state, stacks, random_orders(50, 3))
    assert report.equal
    # and the exhaustive search over every order finds the same single outcome
    assert terminal_signatures(state, stacks) == {report.signatures[0]}


def test_remove_only_particle_gives_zero_odometer():
    state = ArwState.from_particles([(0, True)])
    rep = check_monotone(state, RandomStacks(SeededStream(4), 1.0), RemoveParticle(0))
    assert rep.r_ok and not rep.R_perturbed


def test_two_particle_example_remove_second_particle():
    state, stacks = two_particle_example()
    rep = check_monotone(state, stacks, RemoveParticle(1))
    assert rep.j_perturbed.get(0, 0) == 1 and rep.j[0] == 3
    assert rep.R_perturbed.get(0, 0) == 0 and rep.R[0] == 1
    assert rep.r_ok and rep.j_ok


def test_perturbation_must_name_an_existing_particle():
    state, stacks = two_particle_example()
    with pytest.raises(ParameterError):
        check_monotone(state, stacks, RemoveParticle(5))


small_instances = st.tuples(
    st.lists(st.integers(-3, 3), min_size=1, max_size=4),
    st.integers(0, 2**32 - 1),
    st.sampled_from([0.3, 1.0, 3.0]),
)


@given(small_instances)
def test_every_order_gives_one_outcome(inst):
    positions, seed, lam = inst
    state = ArwState.from_particles([(x, True) for x in positions])
    stacks = RandomStacks(SeededStream(seed), lam)
    outcomes = terminal_signatures(state, stacks)
    final, _ = stabilize(state, stacks)
    assert outcomes == {final.signature()}


@given(small_instances, st.integers(0, 2), st.integers(0, 3), st.integers(1, 6))
def test_perturbations_never_raise_odometers(inst, kind, which, index):
    positions, seed, lam = inst
    state = ArwState.from_particles([(x, True) for x in positions])
    stacks = RandomStacks(SeededStream(seed), lam)
    n = which % state.m
    pert = [RemoveParticle(n), PassifyParticle(n), InsertSleep(positions[n], index)][kind]
    if kind == 1 and Counter(positions)[positions[n]] > 1:
        return  # a Passive particle may not share its site
    assert check_monotone(state, stacks, pert).r_ok


@given(st.integers(0, 2**32 - 1))
def test_steps_conserve_particles_and_change_passive_count_by_at_most_one(seed):
    state = init_state(1.0, 3, SeededStream(seed, 0))
    if state.m == 0:
        return
    stacks = RandomStacks(SeededStream(seed, 1), 1.0)
    labels = SeededStream(seed, 2).integers(state.m, 200)
    st_ = state.copy()
    for n in labels:
        before = int((~st_.active).sum())
        prev_j = dict(st_.j)
        prev_R = dict(st_.R)
        apply_step(st_, stacks, int(n))
        assert st_.m == state.m
        assert abs(int((~st_.active).sum()) - before) <= 1
        assert all(st_.R.get(x, 0) <= st_.j.get(x, 0) for x in st_.j)
        assert all(st_.j.get(x, 0) >= v for x, v in prev_j.items())
        assert all(st_.R.get(x, 0) >= v for x, v in prev_R.items())
        passive = st_.positions[~st_.active]
        occ = Counter(st_.positions.tolist())
        assert all(occ[int(x)] == 1 for x in passive)


# --- continuous time -----------------------------------------------------------------------

def test_timed_empty_state_has_empty_trajectory():
    tr = stabilize_timed(ArwState.from_particles([]), ExplicitStacks({}), 1.0, SeededStream(1), 10.0)
    assert len(tr.times) == 0


def test_timed_first_ring_has_rate_two():
    firsts = []
    for t in range(10_000):
        tr = stabilize_timed(ArwState.from_particles([(0, True)]), RandomStacks(SeededStream(6, t), 1.0),
                             1.0, SeededStream(7, t), 100.0)
        firsts.append(tr.times[0])
    assert within_se(firsts, 0.5)


def test_timed_origin_odometer_is_nondecreasing():
    state = init_state(1.0, 5, SeededStream(12))
    tr = stabilize_timed(state, RandomStacks(SeededStream(13), 1.0), 1.0, SeededStream(14), 50.0)
    r0 = tr.odometer_at(0)
    assert np.all(np.diff(r0) >= 0) and np.all(np.diff(tr.times) > 0)
