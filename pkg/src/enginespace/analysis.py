"""Turning a saturated e-graph into design evidence.

Provides uniform sampling of concrete designs (driven by the exact term
counts), cost-minimizing extraction for two simple objectives, and
diversity metrics over a design set.

The cost proxies are deliberately crude: area is the replication-weighted
product of engine parameters, latency is the loop-trip count per engine
leaf. They exist to rank designs and demonstrate diversity, not to predict
silicon; reports carry them raw.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Literal

from .egraph import EGraph, enode_to_term
from .engine_ir import (
    SPLIT_AXES,
    Buffer,
    Input,
    Par,
    ScheduleTerm,
    Seq,
    hardware_inventory,
    iter_subterms,
    print_term,
)
from .errors import EmptyClassError
from .rng import SplitMix64


@dataclass(frozen=True)
class CostMetrics:
    area_proxy: int  # sum over inventory of replication * product of params
    latency_proxy: int  # sequential kernel invocations (Seq trip products)
    engine_count: int  # total replicated engines


@dataclass(frozen=True)
class DesignPoint:
    term: ScheduleTerm
    inventory: tuple[tuple, ...]  # ((EngineInstance, count), ...) sorted
    cost: CostMetrics


def _area(t: ScheduleTerm) -> int:
    if isinstance(t, Input):
        return 0
    if isinstance(t, (Buffer, Seq)):
        return _area(t.child)
    if isinstance(t, Par):
        return t.factor * _area(t.child)
    return math.prod(v for _, v in t.inst.params) + sum(_area(c) for c in t.children)


def _latency_parts(t: ScheduleTerm) -> tuple[int, int]:
    """(invocations of the enclosing schedule region, upstream buffered work).

    Buffers are materialized once and reused across chunks, so Seq trip
    counts multiply only the engine invocations of their own region, never
    the work behind a buffer.
    """
    if isinstance(t, Input):
        return 0, 0
    if isinstance(t, Buffer):
        r, e = _latency_parts(t.child)
        return 0, r + e
    if isinstance(t, Seq):
        r, e = _latency_parts(t.child)
        return t.factor * r, e
    if isinstance(t, Par):
        return _latency_parts(t.child)
    ups = sum(sum(_latency_parts(c)) for c in t.children)
    return 1, ups


def _latency(t: ScheduleTerm) -> int:
    return sum(_latency_parts(t))


def cost_metrics(t: ScheduleTerm) -> CostMetrics:
    inv = hardware_inventory(t)
    return CostMetrics(
        area_proxy=_area(t),
        latency_proxy=_latency(t),
        engine_count=sum(inv.values()),
    )


def _inventory_key(inv: dict) -> tuple[tuple, ...]:
    return tuple(sorted(inv.items(), key=lambda kv: (kv[0].kind.value, kv[0].params)))


def design_point(t: ScheduleTerm) -> DesignPoint:
    return DesignPoint(term=t, inventory=_inventory_key(hardware_inventory(t)), cost=cost_metrics(t))


def design_to_json(p: DesignPoint) -> dict:
    return {
        "term": print_term(p.term),
        "inventory": [
            {"engine": inst.kind.value, "params": dict(inst.params), "count": count}
            for inst, count in p.inventory
        ],
        "area_proxy": p.cost.area_proxy,
        "latency_proxy": p.cost.latency_proxy,
        "engine_count": p.cost.engine_count,
    }


# ------------------------------------------------------------------ sampling


def sample_designs(
    g: EGraph, root: int, n: int, seed: int, max_depth: int
) -> list[DesignPoint]:
    """Draw n terms uniformly over the distinct terms of depth <= max_depth.

    Node choice is weighted by exact subterm counts, then children are drawn
    independently, which makes the draw exactly uniform. Deterministic given
    the seed; duplicates are possible and kept.
    """
    root = g.find(root)
    table = g.count_table(max_depth)
    total = table[max_depth].get(root, 0)
    if total == 0:
        raise EmptyClassError(f"class {root} has no terms of depth <= {max_depth}")
    rng = SplitMix64(seed)

    def draw(cid: int, depth: int) -> ScheduleTerm:
        cid = g.find(cid)
        r = rng.randbelow(table[depth][cid])
        for node in g.class_nodes(cid):
            w = 1
            for ch in node.children:
                w *= table[depth - 1][g.find(ch)]
                if w == 0:
                    break
            if r < w:
                return enode_to_term(node, (draw(ch, depth - 1) for ch in node.children))
            r -= w
        raise AssertionError("count table inconsistent with class nodes")

    return [design_point(draw(root, max_depth)) for _ in range(n)]


# ---------------------------------------------------------------- extraction

Objective = Literal["min_area", "min_latency"]


def extract_extreme(g: EGraph, root: int, objective: Objective) -> DesignPoint:
    """Bottom-up dynamic programming to the cheapest term under the chosen
    proxy. Ties break toward smaller terms, then lexicographic print order,
    so extraction is total and deterministic."""
    if objective not in ("min_area", "min_latency"):
        raise ValueError(f"unknown objective {objective!r}")
    area = objective == "min_area"

    # best[cid] = (carry, total_cost, size, term); carry is what an enclosing
    # node transforms: the scalar area, or the (region, upstream) latency pair
    best: dict[int, tuple] = {}

    def node_candidate(node):
        child_best = []
        for ch in node.children:
            b = best.get(g.find(ch))
            if b is None:
                return None
            child_best.append(b)
        tag = node.head[0]
        size = 1 + sum(b[2] for b in child_best)
        term = enode_to_term(node, (b[3] for b in child_best))
        if area:
            if tag == "input":
                carry = 0
            elif tag in ("buffer", "seq"):
                carry = child_best[0][0]
            elif tag == "par":
                carry = node.head[2] * child_best[0][0]
            else:
                inst = node.head[1]
                carry = math.prod(v for _, v in inst.params) + sum(b[0] for b in child_best)
            return (carry, carry, size, term)
        if tag == "input":
            carry = (0, 0)
        elif tag == "buffer":
            r, e = child_best[0][0]
            carry = (0, r + e)
        elif tag == "seq":
            r, e = child_best[0][0]
            carry = (node.head[2] * r, e)
        elif tag == "par":
            carry = child_best[0][0]
        else:
            carry = (1, sum(sum(b[0]) for b in child_best))
        return (carry, sum(carry), size, term)

    # Fixpoint relaxation; within a class all alternatives share the same
    # upstream component, so minimizing the total is exact under the
    # Seq/Par multipliers applied by any enclosing node.
    changed = True
    while changed:
        changed = False
        for cid, cls in g.classes.items():
            for node in cls.nodes:
                cand = node_candidate(node)
                if cand is None:
                    continue
                cur = best.get(cid)
                if cur is None or _better(cand, cur):
                    best[cid] = cand
                    changed = True

    b = best.get(g.find(root))
    if b is None:
        raise EmptyClassError(f"class {g.find(root)} has no extractable term")
    return design_point(b[3])


def _better(a: tuple, b: tuple) -> bool:
    if (a[1], a[2]) != (b[1], b[2]):
        return (a[1], a[2]) < (b[1], b[2])
    if a[0] != b[0]:  # same total, different split; keep a stable winner
        return repr(a[0]) < repr(b[0])
    return print_term(a[3]) < print_term(b[3])


# ----------------------------------------------------------------- diversity


def _no_seq(t: ScheduleTerm) -> bool:
    return not any(isinstance(s, Seq) for s in iter_subterms(t))


def _minimal_hardware(p: DesignPoint) -> bool:
    total = sum(count for _, count in p.inventory)
    if total == 1:
        return True
    for inst, _ in p.inventory:
        for _, pname in SPLIT_AXES[inst.kind].items():
            if inst.param(pname) != 1:
                return False
    return True


def _stats(values: list[int]) -> dict:
    return {
        "min": min(values),
        "max": max(values),
        "median": statistics.median(values),
    }


def diversity_metrics(points: list[DesignPoint]) -> dict:
    """How spread out a design set is, plus flags for the two extremes:
    a design with an engine per kernel invocation (no loops at all) and a
    design using minimal hardware."""
    if not points:
        raise EmptyClassError("diversity metrics need at least one design")
    return {
        "num_designs": len(points),
        "distinct_inventories": len({p.inventory for p in points}),
        "area_proxy": _stats([p.cost.area_proxy for p in points]),
        "latency_proxy": _stats([p.cost.latency_proxy for p in points]),
        "engine_count": _stats([p.cost.engine_count for p in points]),
        "has_engine_per_invocation_design": any(_no_seq(p.term) for p in points),
        "has_minimal_hardware_design": any(_minimal_hardware(p) for p in points),
    }
