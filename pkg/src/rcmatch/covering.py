"""Revenue covering checks for the greedy matching auction.

``verify_revenue_covering`` compares ``mu`` times the auction revenue with
the largest critical-bid surplus any feasible matching can collect, and
``verify_chain`` checks the intermediate item-revenue bound for one
matching.  The second half of the module holds the single-buyer
value-covering deviation used in the smoothness argument.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy import integrate, stats

from .errors import ParameterError, SizeGuardError
from .instance import Edge, Instance
from .mechanism import UNMATCHABLE, all_critical_bids, check_bids, run_auction

COVERING_TOL = 1e-9
CHAIN_TOL = 1e-12
ENUMERATION_LIMIT = 24

LAMBDA = 1.0 - 1.0 / math.e


@dataclass(frozen=True)
class Matching:
    pairs: frozenset[Edge]

    def __post_init__(self):
        object.__setattr__(self, "pairs", frozenset((int(i), int(j)) for i, j in self.pairs))

    @property
    def buyers(self) -> frozenset[int]:
        return frozenset(i for i, _ in self.pairs)

    @property
    def items(self) -> frozenset[int]:
        return frozenset(j for _, j in self.pairs)

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(sorted(self.pairs))

    def indicator(self, n_buyers: int) -> tuple[int, ...]:
        matched = self.buyers
        return tuple(int(i in matched) for i in range(n_buyers))


def is_feasible(inst: Instance, m: Matching) -> bool:
    if not m.pairs <= inst.edge_set:
        return False
    return len(m.buyers) == len(m.pairs) == len(m.items)


@dataclass(frozen=True)
class CoveringReport:
    mu: float
    lhs: float
    rhs: float
    witness_matching: Matching
    slack: float

    @property
    def holds(self) -> bool:
        return self.slack >= -COVERING_TOL


@dataclass(frozen=True)
class ChainReport:
    sum_winning_bids: float
    matched_item_revenue: float
    critical_surplus: float

    @property
    def holds(self) -> bool:
        return (
            self.sum_winning_bids >= self.matched_item_revenue - CHAIN_TOL
            and self.matched_item_revenue >= self.critical_surplus - CHAIN_TOL
        )


def enumerate_matchings(inst: Instance) -> Iterator[Matching]:
    """Yield every feasible matching once, the empty one included.

    Brute force: refuses instances with more than 24 edges.
    """
    edges = sorted(inst.edges)
    if len(edges) > ENUMERATION_LIMIT:
        raise SizeGuardError(
            f"{len(edges)} edges exceed the enumeration limit of {ENUMERATION_LIMIT}; "
            "use max_weight_feasible_matching instead"
        )

    chosen: list[Edge] = []
    used_b: set[int] = set()
    used_j: set[int] = set()

    def rec(k):
        if k == len(edges):
            yield Matching(frozenset(chosen))
            return
        yield from rec(k + 1)
        i, j = edges[k]
        if i not in used_b and j not in used_j:
            chosen.append((i, j))
            used_b.add(i)
            used_j.add(j)
            yield from rec(k + 1)
            chosen.pop()
            used_b.discard(i)
            used_j.discard(j)

    yield from rec(0)


def _augment(inst: Instance, root: int, item_owner: list[int], buyer_item: list[int]) -> bool:
    """BFS for an alternating path from free buyer ``root`` to a free item.

    Flips the path in place and returns True when one exists.
    """
    reached_from: dict[int, int] = {}  # item -> buyer that reached it
    seen = {root}
    queue = deque([root])
    while queue:
        i = queue.popleft()
        for j in inst.buyer_items[i]:
            if j in reached_from:
                continue
            reached_from[j] = i
            k = item_owner[j]
            if k < 0:
                while j >= 0:
                    i = reached_from[j]
                    prev = buyer_item[i]
                    item_owner[j] = i
                    buyer_item[i] = j
                    j = prev
                return True
            if k not in seen:
                seen.add(k)
                queue.append(k)
    return False


def max_weight_feasible_matching(
    inst: Instance, buyer_weights: Sequence[float]
) -> tuple[Matching, float]:
    """Maximum-weight matching when edge ``(i, j)`` weighs ``buyer_weights[i]``.

    The sets of buyers coverable by some matching form a transversal
    matroid, so inserting buyers heaviest-first and keeping each one an
    augmenting path can reach is exact.  Augmentation never unmatches a
    buyer, only reroutes it.  Zero-weight buyers are still inserted last
    so the witness is as large as possible.
    """
    w = [float(x) for x in buyer_weights]
    if len(w) != inst.n_buyers:
        raise ParameterError(f"expected {inst.n_buyers} weights, got {len(w)}")
    if any(x < 0 or math.isnan(x) for x in w):
        raise ParameterError("weights must be non-negative")

    item_owner = [-1] * inst.n_items
    buyer_item = [-1] * inst.n_buyers
    picked = []
    for i in sorted(range(inst.n_buyers), key=lambda i: (-w[i], i)):
        if inst.buyer_items[i] and _augment(inst, i, item_owner, buyer_item):
            picked.append(i)
    pairs = frozenset((i, j) for j, i in enumerate(item_owner) if i >= 0)
    return Matching(pairs), math.fsum(w[i] for i in picked)


def verify_revenue_covering(inst: Instance, bids: Sequence[float], mu: float = 1.0) -> CoveringReport:
    if not mu > 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    bids = check_bids(inst, bids)
    outcome = run_auction(inst, bids)
    crit = all_critical_bids(inst, bids)
    witness, rhs = max_weight_feasible_matching(inst, crit.as_floats(unmatchable=0.0))
    lhs = mu * outcome.revenue
    return CoveringReport(mu=mu, lhs=lhs, rhs=rhs, witness_matching=witness, slack=lhs - rhs)


def verify_chain(inst: Instance, bids: Sequence[float], m: Matching, *, outcome=None, critical=None) -> ChainReport:
    """Evaluate revenue >= item revenue over ``m`` >= critical surplus over ``m``.

    ``outcome`` and ``critical`` may be passed in to reuse work when the
    same profile is checked against many matchings.
    """
    if not isinstance(m, Matching):
        m = Matching(frozenset(m))
    if not is_feasible(inst, m):
        raise ParameterError(f"matching {sorted(m.pairs)} is not feasible for this instance")
    outcome = outcome if outcome is not None else run_auction(inst, bids)
    critical = critical if critical is not None else all_critical_bids(inst, bids)
    t = critical.thresholds
    # a feasible matching only touches buyers with edges, so no sentinel reaches here
    assert all(t[i] is not UNMATCHABLE for i in m.buyers)
    return ChainReport(
        sum_winning_bids=outcome.revenue,
        matched_item_revenue=math.fsum(outcome.item_revenues[j] for j in m.items),
        critical_surplus=math.fsum(t[i].threshold for i in m.buyers),
    )


def smoothness_bid_sample(v: float, u: float) -> float:
    """Inverse-CDF draw from the density ``1/(v-b)`` on ``[0, v(1-1/e)]``."""
    if v < 0:
        raise ParameterError(f"value must be >= 0, got {v}")
    if not 0.0 <= u <= 1.0:
        raise ParameterError(f"u must lie in [0, 1], got {u}")
    return v * -math.expm1(-u)


def smoothness_cdf(v: float, b: float) -> float:
    """CDF ``ln(v/(v-b))`` clipped to the support."""
    if b <= 0:
        return 0.0
    if b >= LAMBDA * v:
        return 1.0
    return -math.log1p(-b / v)


def smoothness_density(v: float, b: float) -> float:
    return 1.0 / (v - b) if 0.0 <= b <= LAMBDA * v else 0.0


def value_covering_lhs(v: float, t: float) -> float:
    """Expected utility of the smoothness deviation against threshold ``t``.

    Every bid in the support earns ``(v - b)`` with density ``1/(v - b)``,
    so the expectation collapses to the length of the winning part of the
    support.
    """
    top = LAMBDA * v
    return top - t if t <= top else 0.0


def value_covering_integral(v: float, t: float) -> float:
    """Quadrature of ``(v - b) * f(b)`` over the winning bids ``b >= t``.

    Independent numerical route to :func:`value_covering_lhs`.
    """
    top = LAMBDA * v
    if t >= top:
        return 0.0
    val, _ = integrate.quad(lambda b: (v - b) * smoothness_density(v, b), max(t, 0.0), top, epsabs=1e-12)
    return val


def ks_statistic(samples, v: float) -> float:
    """Kolmogorov-Smirnov distance between ``samples`` and the smoothness CDF."""
    cdf = np.vectorize(lambda b: smoothness_cdf(v, b))
    return float(stats.kstest(np.asarray(samples, dtype=float), cdf).statistic)
