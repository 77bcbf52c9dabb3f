"""RANKING, its bid-based reduction, and competitive-ratio estimation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Sequence

import numpy as np

from .covering import Matching, max_weight_feasible_matching, smoothness_bid_sample
from .errors import ParameterError, ResampleRequired, SizeGuardError, UndefinedRatioError
from .instance import Instance
from .mechanism import Outcome, run_auction

EXACT_LIMIT = 8


@dataclass(frozen=True)
class RatioEstimate:
    mean_matched: float
    opt: int
    ratio: float
    std_error: float
    trials: int
    seed: int

    CSV_FIELDS = ("instance_id", "n", "trials", "seed", "mean_matched", "opt", "ratio", "std_error")

    def csv_row(self, instance_id: str, n: int) -> dict:
        return {
            "instance_id": instance_id,
            "n": n,
            "trials": self.trials,
            "seed": self.seed,
            "mean_matched": self.mean_matched,
            "opt": self.opt,
            "ratio": self.ratio,
            "std_error": self.std_error,
        }


def _check_order(inst: Instance, order: Sequence[int]) -> tuple[int, ...]:
    order = tuple(int(i) for i in order)
    if sorted(order) != list(range(inst.n_buyers)):
        raise ParameterError(f"priority order {order} is not a permutation of the buyers")
    return order


def run_ranking(inst: Instance, order: Sequence[int]) -> Matching:
    """Greedy by priority: each arriving item goes to the highest-priority free neighbour.

    ``order`` lists buyers from highest to lowest priority.
    """
    order = _check_order(inst, order)
    rank = [0] * inst.n_buyers
    for pos, i in enumerate(order):
        rank[i] = pos
    taken = [False] * inst.n_buyers
    pairs = []
    for j in inst.arrival_order:
        best = -1
        for i in inst.item_buyers[j]:
            if not taken[i] and (best < 0 or rank[i] < rank[best]):
                best = i
        if best >= 0:
            taken[best] = True
            pairs.append((best, j))
    return Matching(frozenset(pairs))


def _ranking_sizes(inst: Instance, ranks: np.ndarray) -> np.ndarray:
    """Matched counts of RANKING for a batch of rank rows (lower rank = higher priority)."""
    trials = ranks.shape[0]
    taken = np.zeros((trials, inst.n_buyers), dtype=bool)
    rows = np.arange(trials)
    sizes = np.zeros(trials, dtype=np.int64)
    sentinel = inst.n_buyers  # larger than any rank
    for j in inst.arrival_order:
        nbrs = np.asarray(inst.item_buyers[j], dtype=np.intp)
        if nbrs.size == 0:
            continue
        r = np.where(taken[:, nbrs], sentinel, ranks[:, nbrs])
        pick = np.argmin(r, axis=1)
        ok = r[rows, pick] < sentinel
        taken[rows[ok], nbrs[pick[ok]]] = True
        sizes += ok
    return sizes


def ranking_via_bids(inst: Instance, u: Sequence[float]) -> tuple[Outcome, Matching]:
    """Run the auction on smoothness bids of unit-value buyers alongside RANKING.

    Buyer ``i`` bids ``smoothness_bid_sample(1, u[i])`` and receives priority
    by descending ``u``.  Both matchings are returned for comparison.

    Raises:
        ResampleRequired: if two draws coincide, or a draw maps to a zero
            bid (which would sit the buyer out of the auction).
    """
    u = [float(x) for x in u]
    if len(u) != inst.n_buyers:
        raise ParameterError(f"expected {inst.n_buyers} draws, got {len(u)}")
    bids = [smoothness_bid_sample(1.0, x) for x in u]
    if len(set(bids)) != len(bids) or any(b <= 0.0 for b in bids):
        raise ResampleRequired("draws collide or give a zero bid; redraw u")
    outcome = run_auction(inst, bids)
    order = sorted(range(inst.n_buyers), key=lambda i: -u[i])
    return outcome, run_ranking(inst, order)


def exact_ranking_expectation_fraction(inst: Instance) -> Fraction:
    if inst.n_buyers > EXACT_LIMIT:
        raise SizeGuardError(f"{inst.n_buyers} buyers exceed the exact-enumeration limit of {EXACT_LIMIT}")
    total = 0
    count = 0
    for perm in permutations(range(inst.n_buyers)):
        total += len(run_ranking(inst, perm))
        count += 1
    return Fraction(total, count)


def exact_ranking_expectation(inst: Instance) -> float:
    """Expected RANKING size, averaged over all ``n!`` priority orders."""
    return float(exact_ranking_expectation_fraction(inst))


def estimate_competitive_ratio(
    inst: Instance, trials: int, seed: int = 0, chunk: int = 20_000
) -> RatioEstimate:
    """Monte Carlo estimate of E|RANKING| / |OPT| under uniform priorities.

    Each trial shuffles the buyers with the seeded generator.  ``std_error``
    is on the ratio scale: the sample standard deviation of
    ``matched / opt`` over trials, divided by ``sqrt(trials)``.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    opt = optimal_matching_size(inst)
    if opt == 0:
        raise UndefinedRatioError("instance has no edges; the competitive ratio is undefined")

    rng = np.random.default_rng(seed)
    sizes = []
    done = 0
    while done < trials:
        k = min(chunk, trials - done)
        perms = rng.permuted(np.tile(np.arange(inst.n_buyers), (k, 1)), axis=1)
        ranks = np.argsort(perms, axis=1)
        sizes.append(_ranking_sizes(inst, ranks))
        done += k
    sizes = np.concatenate(sizes).astype(float)
    mean = float(sizes.mean())
    sd = float((sizes / opt).std(ddof=1)) if trials > 1 else 0.0
    return RatioEstimate(
        mean_matched=mean,
        opt=opt,
        ratio=mean / opt,
        std_error=sd / math.sqrt(trials),
        trials=trials,
        seed=seed,
    )


def greedy_nonstrategic(inst: Instance) -> Matching:
    """The auction with every buyer bidding 1, so the lowest index always wins."""
    return Matching(run_auction(inst, [1.0] * inst.n_buyers).matching)


def optimal_matching_size(inst: Instance) -> int:
    m, _ = max_weight_feasible_matching(inst, [1.0] * inst.n_buyers)
    return len(m)


def optimal_welfare(inst: Instance, values: Sequence[float] | None = None) -> float:
    _, w = max_weight_feasible_matching(inst, inst.values if values is None else values)
    return w
