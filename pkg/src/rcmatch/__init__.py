"""Online bipartite matching auctions: simulation and revenue covering checks."""

__version__ = "0.1.0"

from .covering import (
    ChainReport,
    CoveringReport,
    Matching,
    enumerate_matchings,
    max_weight_feasible_matching,
    smoothness_bid_sample,
    value_covering_lhs,
    verify_chain,
    verify_revenue_covering,
)
from .instance import Instance, ValidationReport, gen_random, gen_triangular, parse, serialize, validate_instance
from .mechanism import (
    UNMATCHABLE,
    CriticalBid,
    CriticalBids,
    Outcome,
    all_critical_bids,
    counterfactual_price,
    critical_bid,
    run_auction,
)
from .ranking import (
    RatioEstimate,
    estimate_competitive_ratio,
    exact_ranking_expectation,
    greedy_nonstrategic,
    optimal_matching_size,
    optimal_welfare,
    ranking_via_bids,
    run_ranking,
)
