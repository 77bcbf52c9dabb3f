import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcmatch.errors import MonotonicityError, ParameterError
from rcmatch.instance import Instance
from rcmatch import mechanism
from rcmatch.mechanism import (
    UNMATCHABLE,
    CriticalBid,
    all_critical_bids,
    counterfactual_price,
    critical_bid,
    run_auction,
)

from conftest import instance_and_bids
from oracles import trace_auction


def test_single_item(single):
    out = run_auction(single, [0.5])
    assert out.matching == {(0, 0)}
    assert out.item_revenues == (0.5,)
    assert out.revenue == 0.5


def test_instance_c(inst_c):
    out = run_auction(inst_c, [0.9, 0.5])
    assert out.matching == {(0, 0)}
    assert out.item_revenues == (0.9, 0.0)
    assert out.allocation == (1, 0)
    assert out.payments == (0.9, 0.0)
    assert out.revenue == 0.9


def test_zero_bids_never_win(inst_c):
    out = run_auction(inst_c, [0.0, 0.0])
    assert out.matching == frozenset()
    assert out.revenue == 0.0


def test_tie_goes_to_lowest_index(two_one):
    assert run_auction(two_one, [0.5, 0.5]).matching == {(0, 0)}


def test_bid_length_mismatch(inst_c):
    with pytest.raises(ParameterError):
        run_auction(inst_c, [0.5])
    with pytest.raises(ParameterError):
        run_auction(inst_c, [0.5, -1.0])


@pytest.mark.parametrize("i, j, q", [(1, 0, 0.9), (0, 0, 0.5), (0, 1, 0.0)])
def test_counterfactual_instance_c(inst_c, i, j, q):
    assert counterfactual_price(inst_c, [0.9, 0.5], i, j) == q


def test_counterfactual_bad_indices(inst_c):
    with pytest.raises(ParameterError):
        counterfactual_price(inst_c, [0.9, 0.5], 2, 0)
    with pytest.raises(ParameterError):
        counterfactual_price(inst_c, [0.9, 0.5], 0, 7)


def test_critical_two_buyers_one_item(two_one):
    assert critical_bid(two_one, [0.7, 0.4], 0) == CriticalBid(0.4, True)
    assert critical_bid(two_one, [0.7, 0.4], 1) == CriticalBid(0.7, False)


def test_critical_instance_c(inst_c):
    crit = all_critical_bids(inst_c, [0.9, 0.5])
    assert crit.as_floats() == (0.0, 0.9)
    assert crit[0].wins_at_threshold is False


def test_critical_single_buyer(single):
    crit = all_critical_bids(single, [0.3])
    assert crit.as_floats() == (0.0,)


def test_unmatchable():
    inst = Instance(2, 1, ((1, 0),), (1.0, 1.0), (0,))
    assert critical_bid(inst, [0.2, 0.3], 0) is UNMATCHABLE
    empty = Instance(2, 1, (), (1.0, 1.0), (0,))
    crit = all_critical_bids(empty, [0.2, 0.3])
    assert crit.thresholds == (UNMATCHABLE, UNMATCHABLE)
    assert crit.as_floats() == (math.inf, math.inf)
    assert crit.as_floats(unmatchable=0.0) == (0.0, 0.0)


def test_non_monotone_allocation_is_reported(monkeypatch, two_one):
    # fake allocation: buyer 0 wins inside the lowest gap only
    def broken(inst, bids, absent=-1):
        return [0 if 0 < bids[0] < bids[1] else -1]

    monkeypatch.setattr(mechanism, "_allocate", broken)
    with pytest.raises(MonotonicityError):
        critical_bid(two_one, [0.1, 0.7], 0)


def test_critical_bid_survives_adjacent_floats():
    inst = Instance(3, 2, ((1, 1),), (0.0, 0.0, 0.0), (0, 1))
    assert critical_bid(inst, [0.0, 0.0, 5e-324], 1) == CriticalBid(0.0, False)
    two = Instance(2, 1, ((0, 0), (1, 0)), (1.0, 1.0), (0,))
    a = 0.5
    b = math.nextafter(a, 1.0)
    assert critical_bid(two, [0.1, a], 0) == CriticalBid(a, True)
    assert critical_bid(two, [a, 0.1], 1) == CriticalBid(a, False)
    assert critical_bid(Instance(3, 1, ((0, 0), (1, 0), (2, 0)), (1.0,) * 3, (0,)), [a, b, 0.0], 2) == CriticalBid(b, False)


@given(instance_and_bids())
@settings(max_examples=300)
def test_matches_literal_trace(case):
    inst, bids = case
    out = run_auction(inst, bids)
    won = trace_auction(inst.n_buyers, inst.edge_set, inst.arrival_order, bids)
    assert out.matching == {(i, j) for j, i in won.items()}


@given(instance_and_bids())
@settings(max_examples=300)
def test_outcome_invariants(case):
    inst, bids = case
    out = run_auction(inst, bids)
    assert out.matching <= inst.edge_set
    buyers = [i for i, _ in out.matching]
    items = [j for _, j in out.matching]
    assert len(set(buyers)) == len(buyers) and len(set(items)) == len(items)
    owner = {j: i for i, j in out.matching}
    for j in range(inst.n_items):
        assert out.item_revenues[j] == (bids[owner[j]] if j in owner else 0.0)
    assert out.allocation == tuple(int(i in buyers) for i in range(inst.n_buyers))
    # bookkeeping identity, exact
    assert out.revenue == math.fsum(out.payments) == math.fsum(out.item_revenues)


@given(instance_and_bids(), st.data())
@settings(max_examples=300)
def test_monotone_allocation(case, data):
    inst, bids = case
    i = data.draw(st.integers(0, inst.n_buyers - 1))
    probes = sorted(data.draw(st.lists(st.floats(0, 2), min_size=2, max_size=8)) + list(bids))
    results = []
    for b in probes:
        trial = list(bids)
        trial[i] = b
        results.append(any(k == i for k, _ in run_auction(inst, trial).matching))
    assert results == sorted(results)


@given(instance_and_bids(), st.data())
@settings(max_examples=300)
def test_outbidding_the_field_wins(case, data):
    inst, bids = case
    i = data.draw(st.integers(0, inst.n_buyers - 1))
    if inst.degree(i) == 0:
        return
    trial = list(bids)
    trial[i] = max([b for k, b in enumerate(bids) if k != i], default=0.0) + 0.01
    assert run_auction(inst, trial).allocation[i] == 1


@given(instance_and_bids())
@settings(max_examples=300)
def test_deleting_buyer_equals_zero_bid(case):
    inst, bids = case
    for i in range(inst.n_buyers):
        zeroed = list(bids)
        zeroed[i] = 0.0
        revs = run_auction(inst, zeroed).item_revenues
        assert [counterfactual_price(inst, bids, i, j) for j in range(inst.n_items)] == list(revs)
        assert run_auction(inst.without_buyer(i), bids).item_revenues == revs


@given(instance_and_bids())
@settings(max_examples=300)
def test_counterfactual_sandwich(case):
    inst, bids = case
    out = run_auction(inst, bids)
    crit = all_critical_bids(inst, bids)
    for i, j in inst.edges:
        q = counterfactual_price(inst, bids, i, j)
        assert out.item_revenues[j] >= q >= crit[i].threshold


@given(instance_and_bids())
@settings(max_examples=300)
def test_critical_bid_is_the_infimum(case):
    """Check the threshold against a dense independent scan of own bids."""
    inst, bids = case
    others = sorted(set(bids))
    for i in range(inst.n_buyers):
        t = critical_bid(inst, bids, i)
        if t is UNMATCHABLE:
            assert inst.degree(i) == 0
            continue
        others_i = [b for k, b in enumerate(bids) if k != i]
        assert t.threshold <= max(others_i, default=0.0)
        probes = others + [0.0, 0.3, 0.6, 1.5, t.threshold]
        probes += [math.nextafter(t.threshold, math.inf), math.nextafter(t.threshold, 0.0)]
        for b in probes:
            trial = list(bids)
            trial[i] = b
            wins = run_auction(inst, trial).allocation[i] == 1
            if b > t.threshold:
                assert wins, (i, b, t)
            elif b < t.threshold:
                assert not wins, (i, b, t)
            else:
                assert wins == t.wins_at_threshold


def test_randomized_monotonicity_sweep():
    rng = random.Random(7)
    from rcmatch.instance import gen_random

    for s in range(200):
        inst = gen_random(rng.randint(1, 6), rng.randint(1, 6), 0.5, seed=s)
        bids = [rng.choice([0.2, 0.4, rng.random()]) for _ in range(inst.n_buyers)]
        # raises MonotonicityError on any non-monotone step function
        all_critical_bids(inst, bids)
