"""Discretised complete-information equilibria of the greedy matching auction.

Bids live on the grid ``{0, step, 2*step, ...}`` up to the largest value.
Pure epsilon-equilibria are found by enumerating every grid profile, and
their welfare is compared against the price-of-anarchy guarantee implied
by revenue covering.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import ParameterError, SizeGuardError
from .instance import Instance
from .mechanism import UNMATCHABLE, _allocate, check_bids, critical_bid
from .ranking import optimal_welfare

PROFILE_LIMIT = 10**7
GRID_TOL = 1e-9


@dataclass(frozen=True)
class GameConfig:
    inst: Instance
    values: tuple[float, ...] = None
    grid_step: float = 0.05
    epsilon: float = 0.0
    grid: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        values = self.inst.values if self.values is None else self.values
        values = tuple(float(v) for v in values)
        if len(values) != self.inst.n_buyers:
            raise ParameterError(f"expected {self.inst.n_buyers} values, got {len(values)}")
        if any(v < 0 or not math.isfinite(v) for v in values):
            raise ParameterError("values must be finite and >= 0")
        if not self.grid_step > 0:
            raise ParameterError(f"grid_step must be positive, got {self.grid_step}")
        if not self.epsilon >= 0:
            raise ParameterError(f"epsilon must be >= 0, got {self.epsilon}")
        top = max(values, default=0.0)
        k = math.floor(top / self.grid_step + GRID_TOL)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "grid", tuple(s * self.grid_step for s in range(k + 1)))

    def grid_index(self, b: float) -> int:
        k = round(b / self.grid_step)
        if not 0 <= k < len(self.grid) or abs(self.grid[k] - b) > GRID_TOL * max(1.0, abs(b)):
            raise ParameterError(f"bid {b!r} is not on the grid of step {self.grid_step}")
        return k


@dataclass(frozen=True)
class EquilibriumResult:
    profiles: tuple[tuple[float, ...], ...]
    welfares: tuple[float, ...]
    opt_welfare: float
    # None when no equilibrium exists on the grid
    min_ratio: Optional[float]


def _welfare(cfg: GameConfig, owner: list[int]) -> float:
    return math.fsum(cfg.values[i] for i in owner if i >= 0)


def utility(cfg: GameConfig, bids: Sequence[float], i: int) -> float:
    """Quasi-linear utility ``(v_i - b_i) * x_i`` under the winner-pays-bid rule."""
    bids = check_bids(cfg.inst, bids)
    if not 0 <= i < cfg.inst.n_buyers:
        raise ParameterError(f"buyer index {i} out of range")
    if i in _allocate(cfg.inst, bids):
        return cfg.values[i] - bids[i]
    return 0.0


def best_response(cfg: GameConfig, bids: Sequence[float], i: int) -> tuple[float, float]:
    """Scan the grid for buyer ``i``'s best bid; ties resolve to the lowest bid."""
    trial = list(check_bids(cfg.inst, bids))
    best_bid, best_u = cfg.grid[0], -math.inf
    for b in cfg.grid:
        trial[i] = b
        u = utility(cfg, trial, i)
        if u > best_u:
            best_bid, best_u = b, u
    return best_bid, best_u


def verify_epsilon_equilibrium(cfg: GameConfig, bids: Sequence[float]) -> bool:
    bids = check_bids(cfg.inst, bids)
    for b in bids:
        cfg.grid_index(b)
    for i in range(cfg.inst.n_buyers):
        if utility(cfg, bids, i) < best_response(cfg, bids, i)[1] - cfg.epsilon:
            return False
    return True


def find_pure_equilibria(cfg: GameConfig) -> EquilibriumResult:
    """Enumerate every grid profile and keep the epsilon-equilibria.

    Best-response values are cached per (buyer, opponents' profile), so
    each of those is scanned once rather than once per own bid.
    """
    n = cfg.inst.n_buyers
    g = len(cfg.grid)
    if g**n > PROFILE_LIMIT:
        coarser = cfg.grid_step * 2
        raise SizeGuardError(
            f"{g}^{n} grid profiles exceed {PROFILE_LIMIT}; try grid_step >= {coarser:g}"
        )

    grid = cfg.grid
    br_cache: dict[tuple[int, tuple[int, ...]], float] = {}

    def best_value(i, idx):
        key = (i, idx[:i] + idx[i + 1:])
        if key not in br_cache:
            bids = [grid[k] for k in idx]
            br_cache[key] = best_response(cfg, bids, i)[1]
        return br_cache[key]

    profiles, welfares = [], []
    for idx in itertools.product(range(g), repeat=n):
        bids = [grid[k] for k in idx]
        owner = _allocate(cfg.inst, bids)
        won = set(owner)
        stable = True
        for i in range(n):
            u = cfg.values[i] - bids[i] if i in won else 0.0
            if u < best_value(i, idx) - cfg.epsilon:
                stable = False
                break
        if stable:
            profiles.append(tuple(bids))
            welfares.append(_welfare(cfg, owner))

    opt = optimal_welfare(cfg.inst, cfg.values)
    if not welfares:
        min_ratio = None
    elif opt == 0:
        min_ratio = 1.0
    else:
        min_ratio = min(welfares) / opt
    return EquilibriumResult(tuple(profiles), tuple(welfares), opt, min_ratio)


def default_slack(cfg: GameConfig) -> float:
    """One epsilon and one grid step of utility per buyer."""
    return (cfg.epsilon + cfg.grid_step) * cfg.inst.n_buyers


def verify_poa_bound(result: EquilibriumResult, mu: float = 1.0, slack: float = 0.0) -> bool:
    """``min_ratio >= (1 - 1/e) / mu - slack``; vacuous when no equilibrium was found."""
    if result.min_ratio is None:
        return True
    return result.min_ratio >= (1.0 - 1.0 / math.e) / mu - slack


def poa_welfare_violations(cfg: GameConfig, result: EquilibriumResult) -> list[tuple[tuple[float, ...], float]]:
    """Equilibria whose welfare falls below ``(1 - 1/e) * opt - default_slack``."""
    floor = (1.0 - 1.0 / math.e) * result.opt_welfare - default_slack(cfg)
    return [(p, w) for p, w in zip(result.profiles, result.welfares) if w < floor]


def half_value_deviation_check(cfg: GameConfig, bids: Sequence[float]) -> bool:
    """Does bidding half of value earn at least ``v_i/2 - t_i`` for every buyer?"""
    bids = check_bids(cfg.inst, bids)
    for i in range(cfg.inst.n_buyers):
        t = critical_bid(cfg.inst, bids, i)
        if t is UNMATCHABLE:
            continue
        half = cfg.values[i] / 2
        dev = list(bids)
        dev[i] = half
        if utility(cfg, dev, i) < half - t.threshold:
            return False
    return True
