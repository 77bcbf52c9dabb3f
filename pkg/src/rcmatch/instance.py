"""Bipartite market data model.

Buyers are offline and known up front; items arrive online in a fixed
``arrival_order``.  Every index is 0-based.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import InstanceParseError, ParameterError

Edge = tuple[int, int]


@dataclass(frozen=True)
class Instance:
    n_buyers: int
    n_items: int
    edges: tuple[Edge, ...]
    values: tuple[float, ...]
    arrival_order: tuple[int, ...]

    def __post_init__(self):
        # normalise containers so equality is field-for-field on tuples
        object.__setattr__(self, "edges", tuple((int(i), int(j)) for i, j in self.edges))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "arrival_order", tuple(int(j) for j in self.arrival_order))

    @cached_property
    def item_buyers(self) -> tuple[tuple[int, ...], ...]:
        """For each item, the sorted buyers that may take it."""
        adj: list[list[int]] = [[] for _ in range(self.n_items)]
        for i, j in self.edges:
            adj[j].append(i)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def buyer_items(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.n_buyers)]
        for i, j in self.edges:
            adj[i].append(j)
        return tuple(tuple(sorted(a)) for a in adj)

    @cached_property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    def degree(self, i: int) -> int:
        return len(self.buyer_items[i])

    def without_buyer(self, i: int) -> "Instance":
        """Same market with buyer ``i`` stripped of all its edges.

        Buyer indices are kept stable, so a buyer with no edges is
        indistinguishable from one that is absent.
        """
        return Instance(
            self.n_buyers,
            self.n_items,
            tuple(e for e in self.edges if e[0] != i),
            self.values,
            self.arrival_order,
        )


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_instance(inst: Instance) -> ValidationReport:
    """Check every structural invariant; one violation string per failure."""
    out: list[str] = []
    if inst.n_buyers < 0:
        out.append("n_buyers: negative count")
    if inst.n_items < 0:
        out.append("n_items: negative count")

    seen: set[Edge] = set()
    for k, (i, j) in enumerate(inst.edges):
        if not 0 <= i < inst.n_buyers:
            out.append(f"edges[{k}]: buyer index out of range")
        if not 0 <= j < inst.n_items:
            out.append(f"edges[{k}]: item index out of range")
        if (i, j) in seen:
            out.append(f"edges[{k}]: duplicate edge ({i}, {j})")
        seen.add((i, j))

    if len(inst.values) != inst.n_buyers:
        out.append(f"values: expected {inst.n_buyers} entries, got {len(inst.values)}")
    for i, v in enumerate(inst.values):
        if not math.isfinite(v):
            out.append(f"values[{i}]: not finite")
        elif v < 0:
            out.append(f"values[{i}]: negative")

    if sorted(inst.arrival_order) != list(range(inst.n_items)):
        out.append("arrival_order: not a permutation of the item indices")
    return ValidationReport(tuple(out))


def gen_random(
    n_buyers: int,
    n_items: int,
    edge_prob: float,
    value_low: float = 1.0,
    value_high: float = 1.0,
    seed: int = 0,
) -> Instance:
    """Erdos-Renyi style bipartite market with uniform values and a random order."""
    if n_buyers < 0 or n_items < 0:
        raise ParameterError("counts must be non-negative")
    if not 0.0 <= edge_prob <= 1.0:
        raise ParameterError(f"edge_prob must lie in [0, 1], got {edge_prob}")
    if not 0.0 <= value_low <= value_high or not math.isfinite(value_high):
        raise ParameterError(f"need 0 <= value_low <= value_high, got {value_low}, {value_high}")

    rng = np.random.default_rng(seed)
    mask = rng.random((n_buyers, n_items)) < edge_prob
    values = rng.uniform(value_low, value_high, size=n_buyers)
    order = rng.permutation(n_items)
    edges = tuple((int(i), int(j)) for i, j in zip(*np.nonzero(mask)))
    return Instance(n_buyers, n_items, edges, tuple(values.tolist()), tuple(order.tolist()))


def gen_triangular(n: int) -> Instance:
    """Upper-triangular hard family: buyer ``i`` may take item ``j`` iff ``i >= j``.

    Items arrive in index order and the identity matching is perfect.
    """
    if n < 1:
        raise ParameterError("gen_triangular needs n >= 1")
    edges = tuple((i, j) for i in range(n) for j in range(i + 1))
    return Instance(n, n, edges, (1.0,) * n, tuple(range(n)))


def to_dict(inst: Instance) -> dict:
    return {
        "n_buyers": inst.n_buyers,
        "n_items": inst.n_items,
        "edges": [list(e) for e in inst.edges],
        "values": list(inst.values),
        "arrival_order": list(inst.arrival_order),
    }


def serialize(inst: Instance) -> str:
    report = validate_instance(inst)
    if not report.ok:
        raise ParameterError("cannot serialize invalid instance: " + "; ".join(report.violations))
    return json.dumps(to_dict(inst))


def _int(x, where):
    if isinstance(x, bool) or not isinstance(x, int):
        raise InstanceParseError(f"expected an integer, got {x!r}", where)
    return x


def _real(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InstanceParseError(f"expected a number, got {x!r}", where)
    return float(x)


def from_dict(obj) -> Instance:
    """Build and validate an instance from decoded JSON.

    Unknown keys are ignored so callers can carry extras (such as bids)
    in the same document.
    """
    if not isinstance(obj, dict):
        raise InstanceParseError("top level must be an object", "$")
    for key in ("n_buyers", "n_items", "edges", "arrival_order"):
        if key not in obj:
            raise InstanceParseError(f"missing required field {key!r}", key)
    n = _int(obj["n_buyers"], "n_buyers")
    m = _int(obj["n_items"], "n_items")

    if not isinstance(obj["edges"], list):
        raise InstanceParseError("expected an array", "edges")
    edges = []
    for k, e in enumerate(obj["edges"]):
        if not isinstance(e, list) or len(e) != 2:
            raise InstanceParseError("edge must be a [buyer, item] pair", f"edges[{k}]")
        edges.append((_int(e[0], f"edges[{k}][0]"), _int(e[1], f"edges[{k}][1]")))

    if "values" in obj:
        if not isinstance(obj["values"], list):
            raise InstanceParseError("expected an array", "values")
        values = tuple(_real(v, f"values[{i}]") for i, v in enumerate(obj["values"]))
    else:
        values = (1.0,) * max(n, 0)

    if not isinstance(obj["arrival_order"], list):
        raise InstanceParseError("expected an array", "arrival_order")
    order = tuple(_int(j, f"arrival_order[{k}]") for k, j in enumerate(obj["arrival_order"]))

    inst = Instance(n, m, tuple(edges), values, order)
    report = validate_instance(inst)
    if not report.ok:
        first = report.violations[0]
        location = first.split(":", 1)[0]
        raise InstanceParseError("; ".join(report.violations), location)
    return inst


def parse(text: str) -> Instance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from exc
    return from_dict(obj)
