from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from artifact.brokenline import (MINUS_HIGH, MINUS_LOW, PLUS_HIGH, PLUS_LOW, BrokenTrace, RectDomain,
                                 to_ij, to_tx)
from artifact.errors import DomainError, ParameterError

from conftest import random_crossing_trace


@given(st.integers(-50, 50), st.integers(-50, 50))
def test_chart_round_trip(i, j):
    t, x = to_tx(i, j)
    assert (t + x) % 2 == 0 and to_ij(t, x) == (i, j)


def test_odd_site_is_rejected():
    with pytest.raises(DomainError):
        to_ij(1, 0)


@given(st.integers(1, 7), st.integers(1, 7))
def test_sites_match_the_inequalities(N, M):
    d = RectDomain(N, M)
    sites = set(d.sites())
    box = {(t, x) for t in range(-20, 20) for x in range(-20, 20)
           if (t + x) % 2 == 0 and 0 <= t + x <= 2 * (M - 1) and 0 <= t - x <= 2 * (N - 1)}
    assert sites == box and len(sites) == N * M
    assert all(d.contains(t, x) for t, x in sites)


@given(st.integers(1, 6), st.integers(1, 6))
def test_boundary_classes_partition_the_closure_rim(N, M):
    d = RectDomain(N, M)
    classes = d.boundary()
    all_rim = [s for v in classes.values() for s in v]
    assert len(all_rim) == len(set(all_rim)) == 2 * (N + M)
    for name, members in classes.items():
        assert all(d.boundary_class(t, x) == name for t, x in members)
    # the closure adds exactly the rim sites at distance sqrt(2) from the domain
    sites = set(d.sites())
    near = {(t + a, x + b) for t, x in sites for a in (-1, 1) for b in (-1, 1)} - sites
    assert near == set(all_rim)


def test_corner_sites_get_the_class_of_their_edge():
    d = RectDomain(1, 1)
    assert d.boundary_class(*to_tx(1, 0)) == MINUS_LOW
    assert d.boundary_class(*to_tx(0, 1)) == PLUS_LOW
    assert d.boundary_class(*to_tx(1, 2)) == PLUS_HIGH
    assert d.boundary_class(*to_tx(2, 1)) == MINUS_HIGH
    assert d.boundary_class(*to_tx(0, 0)) is None


def test_domain_needs_positive_sides():
    with pytest.raises(ParameterError):
        RectDomain(0, 3)


def test_mirrored_domain_swaps_sides():
    assert RectDomain(2, 5).mirrored() == RectDomain(5, 2)


def test_edge_slots():
    d = RectDomain(2, 3)
    assert d.edge_slot(to_tx(1, 1), to_tx(1, 2)) == ("ne", 0, 1)
    assert d.edge_slot(to_tx(1, 1), to_tx(2, 1)) == ("se", 1, 0)
    assert d.edge_slot(to_tx(0, 2), to_tx(1, 2)) == ("se", 0, 1)
    with pytest.raises(DomainError):
        d.edge_slot(to_tx(0, 0), to_tx(0, 1))
    with pytest.raises(DomainError):
        d.edge_slot((0, 0), (2, 0))


def test_trace_validation():
    with pytest.raises(ParameterError):
        BrokenTrace([0], 0)
    with pytest.raises(ParameterError):
        BrokenTrace([0, 2], 0)
    with pytest.raises(ParameterError):
        BrokenTrace([1, 0], 0)
    with pytest.raises(ParameterError):
        BrokenTrace.from_vertices([(0, 0), (1, 2)])


def test_trace_relations():
    a = BrokenTrace([1, 0, 1, 2], -1)
    sub = a.subtrace(1, 3)
    assert sub.within(a) and not a.within(sub)
    assert a.left_corners() == [(0, 0)]
    later = BrokenTrace([3, 2, 3, 4], -1)
    assert later.right_of(a) and not a.right_of(later)
    assert BrokenTrace.from_dict(a.to_dict()) == a and hash(BrokenTrace.from_dict(a.to_dict())) == hash(a)


def test_random_traces_cross_the_domain():
    rng = np.random.default_rng(0)
    d = RectDomain(4, 5)
    for _ in range(200):
        tr = random_crossing_trace(d, rng)
        assert tr.crosses(d) and tr.inside(d)
        assert not tr.subtrace(1, tr.n).crosses(d) or tr.n == 1
