"""Online winner-pays-bid greedy matching.

Each arriving item goes to the unmatched feasible buyer with the highest
strictly positive bid; ties go to the lowest buyer index.  A winner pays
its bid.  On top of the simulator sit the two quantities the revenue
covering argument needs: per-buyer critical bids and the counterfactual
price an item fetches when one buyer stays out of the market.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

from .errors import MonotonicityError, ParameterError
from .instance import Edge, Instance


class _Sentinel(enum.Enum):
    UNMATCHABLE = "UNMATCHABLE"

    def __repr__(self):
        return self.value


#: Critical bid of a buyer without edges; consumers read it as +inf.
UNMATCHABLE = _Sentinel.UNMATCHABLE


class CriticalBid(NamedTuple):
    threshold: float
    wins_at_threshold: bool


CriticalBidResult = Union[CriticalBid, _Sentinel]


@dataclass(frozen=True)
class Outcome:
    matching: frozenset[Edge]
    item_revenues: tuple[float, ...]
    allocation: tuple[int, ...]
    payments: tuple[float, ...]
    revenue: float

    def buyer_of(self) -> dict[int, int]:
        return {j: i for i, j in self.matching}


@dataclass(frozen=True)
class CriticalBids:
    thresholds: tuple[CriticalBidResult, ...]

    def as_floats(self, unmatchable: float = math.inf) -> tuple[float, ...]:
        """Thresholds as plain numbers, substituting ``unmatchable`` for the sentinel."""
        return tuple(unmatchable if t is UNMATCHABLE else t.threshold for t in self.thresholds)

    def __len__(self):
        return len(self.thresholds)

    def __getitem__(self, i):
        return self.thresholds[i]


def check_bids(inst: Instance, bids: Sequence[float]) -> tuple[float, ...]:
    bids = tuple(float(b) for b in bids)
    if len(bids) != inst.n_buyers:
        raise ParameterError(f"expected {inst.n_buyers} bids, got {len(bids)}")
    for i, b in enumerate(bids):
        if not math.isfinite(b) or b < 0:
            raise ParameterError(f"bid {i} must be finite and >= 0, got {b}")
    return bids


def _check_buyer(inst: Instance, i: int) -> None:
    if not 0 <= i < inst.n_buyers:
        raise ParameterError(f"buyer index {i} out of range")


def _allocate(inst: Instance, bids: Sequence[float], absent: int = -1) -> list[int]:
    """Winner of each item (``-1`` if unsold); buyer ``absent`` sits out."""
    owner = [-1] * inst.n_items
    taken = [False] * inst.n_buyers
    if 0 <= absent < inst.n_buyers:
        taken[absent] = True
    item_buyers = inst.item_buyers
    for j in inst.arrival_order:
        best = -1
        best_bid = 0.0
        # item_buyers is sorted, so strict '>' keeps the lowest index on ties
        for i in item_buyers[j]:
            if not taken[i]:
                b = bids[i]
                if b > best_bid:
                    best = i
                    best_bid = b
        if best >= 0:
            taken[best] = True
            owner[j] = best
    return owner


def _is_matched(inst: Instance, bids: list[float], i: int, b: float) -> bool:
    saved = bids[i]
    bids[i] = b
    try:
        return i in _allocate(inst, bids)
    finally:
        bids[i] = saved


def run_auction(inst: Instance, bids: Sequence[float]) -> Outcome:
    """Simulate the greedy winner-pays-bid mechanism for one bid profile.

    >>> from rcmatch.instance import Instance
    >>> inst = Instance(2, 2, ((0, 0), (0, 1), (1, 0)), (1.0, 1.0), (0, 1))
    >>> out = run_auction(inst, [0.9, 0.5])
    >>> sorted(out.matching), out.revenue
    ([(0, 0)], 0.9)
    """
    bids = check_bids(inst, bids)
    owner = _allocate(inst, bids)
    allocation = [0] * inst.n_buyers
    matching = set()
    for j, i in enumerate(owner):
        if i >= 0:
            allocation[i] = 1
            matching.add((i, j))
    item_revenues = tuple(bids[i] if i >= 0 else 0.0 for i in owner)
    payments = tuple(b * x for b, x in zip(bids, allocation))
    # fsum is exactly rounded, so summing by item or by buyer agrees bit-for-bit
    return Outcome(
        matching=frozenset(matching),
        item_revenues=item_revenues,
        allocation=tuple(allocation),
        payments=payments,
        revenue=math.fsum(item_revenues),
    )


def counterfactual_price(inst: Instance, bids: Sequence[float], i: int, j: int) -> float:
    """Price item ``j`` fetches when buyer ``i`` does not participate (0 if unsold)."""
    bids = check_bids(inst, bids)
    _check_buyer(inst, i)
    if not 0 <= j < inst.n_items:
        raise ParameterError(f"item index {j} out of range")
    k = _allocate(inst, bids, absent=i)[j]
    return bids[k] if k >= 0 else 0.0


def critical_bid(inst: Instance, bids: Sequence[float], i: int) -> CriticalBidResult:
    """Infimum own bid at which buyer ``i`` is matched, others held fixed.

    The allocation depends on bids only through their order and their
    sign, so it is a step function of ``i``'s bid that can only change at
    another buyer's bid.  Probing every breakpoint and one point inside
    each gap recovers it exactly.  The probes run on an order-preserving
    integer relabelling (breakpoints at even codes, gap interiors at odd
    ones) so a gap always has an interior point, even between adjacent
    floats.  Returns ``UNMATCHABLE`` for a buyer without edges.

    Raises:
        MonotonicityError: if ``i`` wins at some probe and loses at a
            higher one.
    """
    bids = check_bids(inst, bids)
    _check_buyer(inst, i)
    if inst.degree(i) == 0:
        return UNMATCHABLE

    cuts = sorted(set(b for k, b in enumerate(bids) if k != i) | {0.0})
    code = {c: 2.0 * k for k, c in enumerate(cuts)}
    coded = [code[b] if k != i else 0.0 for k, b in enumerate(bids)]

    first_win = None
    for p in range(2 * len(cuts)):
        wins = _is_matched(inst, coded, i, float(p))
        if wins and first_win is None:
            first_win = p
        elif not wins and first_win is not None:
            raise MonotonicityError(
                f"buyer {i} wins at probe {_describe(cuts, first_win)} but loses at {_describe(cuts, p)}"
            )
    if first_win is None:
        raise MonotonicityError(f"buyer {i} has an edge but loses even above every other bid")
    # odd code: first win strictly inside a gap, so the left breakpoint lost
    return CriticalBid(cuts[first_win // 2], first_win % 2 == 0)


def _describe(cuts, p):
    lo = cuts[p // 2]
    if p % 2 == 0:
        return repr(lo)
    hi = cuts[p // 2 + 1] if p // 2 + 1 < len(cuts) else math.inf
    return f"({lo!r}, {hi!r})"


def all_critical_bids(inst: Instance, bids: Sequence[float]) -> CriticalBids:
    return CriticalBids(tuple(critical_bid(inst, bids, i) for i in range(inst.n_buyers)))
