"""Command-line front end.

Every command reads one instance file (except ``generate`` and
``value-covering``) and writes a JSON report carrying the command, seed,
instance hash and tool version next to the result.  Exit codes: 0 ok,
1 a verification failed, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .covering import (
    LAMBDA,
    Matching,
    enumerate_matchings,
    is_feasible,
    ks_statistic,
    smoothness_bid_sample,
    value_covering_integral,
    value_covering_lhs,
    verify_chain,
    verify_revenue_covering,
)
from .equilibrium import (
    GameConfig,
    default_slack,
    find_pure_equilibria,
    poa_welfare_violations,
    verify_poa_bound,
)
from .errors import InstanceParseError, ParameterError, SizeGuardError, UndefinedRatioError
from .instance import Instance, from_dict, gen_random, gen_triangular, serialize
from .mechanism import UNMATCHABLE, all_critical_bids, check_bids, run_auction
from .ranking import (
    RatioEstimate,
    estimate_competitive_ratio,
    exact_ranking_expectation,
    greedy_nonstrategic,
    optimal_matching_size,
)

COMMANDS = (
    "generate",
    "simulate",
    "critical-bids",
    "verify-covering",
    "verify-chain",
    "ranking-ratio",
    "exact-ranking",
    "greedy",
    "equilibria",
    "verify-poa",
    "value-covering",
)
NO_INPUT = {"generate", "value-covering"}

# two-sided KS critical value at alpha = 0.001 is about 1.95 / sqrt(n)
KS_COEF = 1.9495


@dataclass
class RunConfig:
    command: str
    input_path: Optional[str] = None
    seed: int = 0
    trials: int = 10000
    mu: float = 1.0
    grid_step: float = 0.05
    epsilon: float = 0.0
    format: str = "json"
    output_path: Optional[str] = None
    # generate only
    family: str = "random"
    n: int = 3
    n_buyers: int = 4
    n_items: int = 4
    edge_prob: float = 0.5
    value_low: float = 1.0
    value_high: float = 1.0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rcmatch", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("input_path", nargs="?", help="instance file (JSON)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--grid-step", type=float, default=0.05)
    p.add_argument("--epsilon", type=float, default=0.0)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", dest="output_path", default=None)
    g = p.add_argument_group("generate")
    g.add_argument("--family", choices=("random", "triangular"), default="random")
    g.add_argument("--n", type=int, default=3, help="size of the triangular family")
    g.add_argument("--n-buyers", type=int, default=4)
    g.add_argument("--n-items", type=int, default=4)
    g.add_argument("--edge-prob", type=float, default=0.5)
    g.add_argument("--value-low", type=float, default=1.0)
    g.add_argument("--value-high", type=float, default=1.0)
    return p


def parse_args(argv: Sequence[str]) -> RunConfig:
    """Map argv onto a RunConfig; usage errors exit with status 2."""
    parser = _build_parser()
    ns = parser.parse_args(list(argv))
    if ns.command not in NO_INPUT:
        if ns.input_path is None:
            parser.error(f"{ns.command} needs an instance file")
        if not os.access(ns.input_path, os.R_OK) or os.path.isdir(ns.input_path):
            parser.error(f"cannot read {ns.input_path}")
    if ns.trials < 1:
        parser.error("--trials must be >= 1")
    if not ns.mu > 0:
        parser.error("--mu must be positive")
    if not ns.grid_step > 0:
        parser.error("--grid-step must be positive")
    if ns.epsilon < 0:
        parser.error("--epsilon must be >= 0")
    if ns.format == "csv" and ns.command != "ranking-ratio":
        parser.error("csv output is only available for ranking-ratio")
    return RunConfig(**vars(ns))


def _pairs(m) -> list[list[int]]:
    pairs = m.pairs if isinstance(m, Matching) else m
    return [list(e) for e in sorted(pairs)]


def _critical_json(crit) -> list:
    return [
        "UNMATCHABLE" if t is UNMATCHABLE else {"threshold": t.threshold, "wins_at_threshold": t.wins_at_threshold}
        for t in crit.thresholds
    ]


def _outcome_json(out) -> dict:
    return {
        "matching": _pairs(out.matching),
        "item_revenues": list(out.item_revenues),
        "allocation": list(out.allocation),
        "payments": list(out.payments),
        "revenue": out.revenue,
    }


def instance_hash(inst: Instance) -> str:
    return hashlib.sha256(serialize(inst).encode("utf-8")).hexdigest()


def _load(cfg: RunConfig) -> tuple[Instance, dict]:
    text = Path(cfg.input_path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    return from_dict(obj), obj


def _bids(cfg: RunConfig, inst: Instance, obj: dict) -> tuple[list[float], str]:
    """Bids from the file, else smoothness-distribution draws from the seed."""
    if "bids" in obj:
        return list(check_bids(inst, obj["bids"])), "input"
    rng = np.random.default_rng(cfg.seed)
    u = rng.random(inst.n_buyers)
    return [smoothness_bid_sample(v, float(x)) for v, x in zip(inst.values, u)], "sampled"


def _matching_from(obj, inst: Instance) -> Matching:
    m = Matching(frozenset(tuple(e) for e in obj))
    if not is_feasible(inst, m):
        raise ParameterError(f"matching {sorted(m.pairs)} is not feasible")
    return m


def _value_covering(cfg: RunConfig) -> tuple[dict, bool]:
    v = 1.0
    ts = np.linspace(0.0, LAMBDA * v, 100)
    errs = [abs(value_covering_lhs(v, float(t)) - value_covering_integral(v, float(t))) for t in ts]
    rng = np.random.default_rng(cfg.seed)
    samples = v * -np.expm1(-rng.random(cfg.trials))
    ks = ks_statistic(samples, v)
    ks_limit = KS_COEF / math.sqrt(cfg.trials)
    integral_ok = max(errs) <= 1e-6
    ks_ok = ks < ks_limit
    return {
        "v": v,
        "thresholds": len(ts),
        "max_abs_error": max(errs),
        "integral_agrees": integral_ok,
        "samples": cfg.trials,
        "ks_statistic": ks,
        "ks_limit": ks_limit,
        "ks_ok": ks_ok,
        "holds": integral_ok and ks_ok,
    }, integral_ok and ks_ok


def _execute(cfg: RunConfig, inst: Optional[Instance], obj: dict) -> tuple[dict, bool]:
    """Run one command; returns (result subtree, all verifications passed)."""
    c = cfg.command
    if c == "value-covering":
        return _value_covering(cfg)

    if c in ("simulate", "critical-bids", "verify-covering", "verify-chain"):
        bids, source = _bids(cfg, inst, obj)
        res = {"bids": bids, "bids_source": source}
        if c == "simulate":
            res["outcome"] = _outcome_json(run_auction(inst, bids))
            return res, True
        if c == "critical-bids":
            res["critical_bids"] = _critical_json(all_critical_bids(inst, bids))
            return res, True
        if c == "verify-covering":
            rep = verify_revenue_covering(inst, bids, cfg.mu)
            res.update(
                mu=rep.mu,
                lhs=rep.lhs,
                rhs=rep.rhs,
                witness_matching=_pairs(rep.witness_matching),
                slack=rep.slack,
                holds=rep.holds,
            )
            return res, rep.holds
        outcome = run_auction(inst, bids)
        crit = all_critical_bids(inst, bids)
        if "matching" in obj:
            matchings = [_matching_from(obj["matching"], inst)]
            res["mode"] = "input"
        else:
            matchings = list(enumerate_matchings(inst))
            res["mode"] = "all"
        failures = []
        for m in matchings:
            rep = verify_chain(inst, bids, m, outcome=outcome, critical=crit)
            if not rep.holds:
                failures.append(
                    {
                        "matching": _pairs(m),
                        "sum_winning_bids": rep.sum_winning_bids,
                        "matched_item_revenue": rep.matched_item_revenue,
                        "critical_surplus": rep.critical_surplus,
                    }
                )
        if len(matchings) == 1:
            rep = verify_chain(inst, bids, matchings[0], outcome=outcome, critical=crit)
            res.update(
                sum_winning_bids=rep.sum_winning_bids,
                matched_item_revenue=rep.matched_item_revenue,
                critical_surplus=rep.critical_surplus,
            )
        res.update(matchings_checked=len(matchings), violations=failures, holds=not failures)
        return res, not failures

    if c == "ranking-ratio":
        est = estimate_competitive_ratio(inst, cfg.trials, cfg.seed)
        return {
            "mean_matched": est.mean_matched,
            "opt": est.opt,
            "ratio": est.ratio,
            "std_error": est.std_error,
            "trials": est.trials,
            "seed": est.seed,
        }, True

    if c == "exact-ranking":
        opt = optimal_matching_size(inst)
        e = exact_ranking_expectation(inst)
        return {"expectation": e, "opt": opt, "ratio": e / opt if opt else None}, True

    if c == "greedy":
        m = greedy_nonstrategic(inst)
        opt = optimal_matching_size(inst)
        return {
            "matching": _pairs(m),
            "size": len(m),
            "opt": opt,
            "approximation": opt / len(m) if len(m) else None,
        }, True

    game = GameConfig(inst, grid_step=cfg.grid_step, epsilon=cfg.epsilon)
    result = find_pure_equilibria(game)
    res = {
        "grid_step": cfg.grid_step,
        "epsilon": cfg.epsilon,
        "profiles": [list(p) for p in result.profiles],
        "welfares": list(result.welfares),
        "opt_welfare": result.opt_welfare,
        "min_ratio": result.min_ratio,
        "count": len(result.profiles),
    }
    if c == "equilibria":
        return res, True
    slack = default_slack(game)
    bound_ok = verify_poa_bound(result, cfg.mu, slack / result.opt_welfare if result.opt_welfare else 0.0)
    bad = poa_welfare_violations(game, result)
    ok = bound_ok and not bad
    res.update(
        mu=cfg.mu,
        slack=slack,
        bound=(1.0 - 1.0 / math.e) / cfg.mu,
        violations=[{"profile": list(p), "welfare": w} for p, w in bad],
        holds=ok,
    )
    return res, ok


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output_path:
        Path(cfg.output_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def run(cfg: RunConfig) -> int:
    try:
        if cfg.command == "generate":
            if cfg.family == "triangular":
                inst = gen_triangular(cfg.n)
            else:
                inst = gen_random(cfg.n_buyers, cfg.n_items, cfg.edge_prob, cfg.value_low, cfg.value_high, cfg.seed)
            _emit(cfg, json.dumps(json.loads(serialize(inst)), indent=2) + "\n")
            return 0

        inst, obj = (None, {}) if cfg.input_path is None else _load(cfg)
        result, ok = _execute(cfg, inst, obj)
    except (InstanceParseError, ParameterError, SizeGuardError, UndefinedRatioError, OSError) as exc:
        print(f"rcmatch: error: {exc}", file=sys.stderr)
        return 2

    if cfg.format == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=RatioEstimate.CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        est = RatioEstimate(**result)
        writer.writerow(est.csv_row(Path(cfg.input_path).stem, inst.n_buyers))
        _emit(cfg, buf.getvalue())
    else:
        report = {
            "command": cfg.command,
            "seed": cfg.seed,
            "instance_hash": instance_hash(inst) if inst is not None else None,
            "tool_version": __version__,
            "result": result,
        }
        _emit(cfg, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0 if ok else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    cfg = parse_args(sys.argv[1:] if argv is None else argv)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
