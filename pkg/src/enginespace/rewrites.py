"""Rewrite catalog and the saturation runner.

The catalog encodes the hardware-software split moves, one family per name
(selectable as ``r1``..``r5`` from the CLI):

* r1  shrink an engine by wrapping a sequential loop over a split axis,
      one rewrite per engine kind/axis, one instance per divisor.
* r2  turn a sequential loop into replicated hardware (Seq -> Par).
* r3  inverse of r2 (Par -> Seq), keeping the space symmetric.
* r4  inverse of r1: collapse a loop around an engine into a bigger engine.
* r5  refactor loop nests: Seq(k1*k2) <-> Seq(k1, Seq(k2)).

``r1-broken`` is a deliberately unsound fixture (relu -> add of the input
with itself) used as the negative control for equivalence checking; it is
shape-preserving, so only the interpreter can catch it.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

from .egraph import EGraph
from .engine_ir import DECLS, SPLIT_AXES, divisors
from .errors import EnginespaceError
from .patterns import PEngine, PPar, PSeq, Pattern, ScalarVar, Subst, TermVar
from .workload import OpKind

FACTOR_POLICIES = ("all", "pow2", "binary")


def split_factors(extent: int, policy: str = "all") -> list[int]:
    """Candidate split factors for an extent under a factor policy."""
    ds = divisors(extent)
    if policy == "all":
        return ds
    if policy == "pow2":
        return [d for d in ds if d & (d - 1) == 0]
    if policy == "binary":
        return [d for d in ds if d == 2]
    raise ValueError(f"unknown factor policy {policy!r}")


@dataclass(frozen=True)
class Rewrite:
    """A conditional pattern pair. ``build`` maps each match substitution to
    the (possibly several) right-hand sides to union with the matched class;
    divisor enumeration lives there."""

    name: str
    tag: str
    lhs: Pattern
    build: Callable[[Subst], Iterable[Pattern]]
    condition: Callable[[Subst], bool] = field(default=lambda s: True)


def _engine_lhs(kind: OpKind) -> PEngine:
    params = tuple((n, ScalarVar(n)) for n in DECLS[kind].param_names)
    args = tuple(TermVar(f"x{i}") for i in range(2 if kind is not OpKind.RELU else 1))
    return PEngine(kind, params, args)


def _r1_rules(policy: str) -> list[Rewrite]:
    rules = []
    for kind in OpKind:
        for axis, pname in SPLIT_AXES[kind].items():
            lhs = _engine_lhs(kind)

            def build(subst, kind=kind, axis=axis, pname=pname, lhs=lhs):
                p = subst[pname]
                for k in split_factors(p, policy):
                    params = tuple(
                        (n, p // k if n == pname else v) for n, v in lhs.params
                    )
                    yield PSeq(axis, k, PEngine(kind, params, lhs.args))

            rules.append(Rewrite("r1", f"r1/{kind}/ax{axis}", lhs, build))
    return rules


def _r4_rules() -> list[Rewrite]:
    rules = []
    for kind in OpKind:
        for axis, pname in SPLIT_AXES[kind].items():
            inner = _engine_lhs(kind)
            lhs = PSeq(axis, ScalarVar("k"), inner)

            def build(subst, kind=kind, pname=pname, inner=inner):
                merged = subst["k"] * subst[pname]
                params = tuple((n, merged if n == pname else v) for n, v in inner.params)
                yield PEngine(kind, params, inner.args)

            rules.append(Rewrite("r4", f"r4/{kind}/ax{axis}", lhs, build))
    return rules


def _r5_rules(policy: str) -> list[Rewrite]:
    a, k, e = ScalarVar("a"), ScalarVar("k"), TermVar("e")

    def build_split(subst):
        kk = subst["k"]
        for k1 in split_factors(kk, policy):
            k2 = kk // k1
            if k2 >= 2 and k2 in split_factors(kk, policy):
                yield PSeq(a, k1, PSeq(a, k2, e))

    split = Rewrite("r5", "r5/split", PSeq(a, k, e), build_split)
    nested = PSeq(ScalarVar("a"), ScalarVar("k1"), PSeq(ScalarVar("a"), ScalarVar("k2"), e))

    def build_merge(subst):
        yield PSeq(ScalarVar("a"), subst["k1"] * subst["k2"], e)

    merge = Rewrite("r5", "r5/merge", nested, build_merge)
    return [split, merge]


def _simple(name: str, tag: str, lhs: Pattern, rhs: Pattern) -> Rewrite:
    return Rewrite(name, tag, lhs, lambda subst, rhs=rhs: (rhs,))


def _broken_rule() -> Rewrite:
    lhs = PEngine(OpKind.RELU, (("W", ScalarVar("W")),), (TermVar("x"),))
    rhs = PEngine(OpKind.ADD, (("W", ScalarVar("W")),), (TermVar("x"), TermVar("x")))
    return _simple("r1-broken", "r1-broken/relu", lhs, rhs)


def builtin_rules(factor_policy: str = "all") -> list[Rewrite]:
    """The default catalog (r1..r5), in deterministic order."""
    a, k, e = ScalarVar("a"), ScalarVar("k"), TermVar("e")
    rules = _r1_rules(factor_policy)
    rules.append(_simple("r2", "r2/parallelize", PSeq(a, k, e), PPar(a, k, e)))
    rules.append(_simple("r3", "r3/serialize", PPar(a, k, e), PSeq(a, k, e)))
    rules.extend(_r4_rules())
    rules.extend(_r5_rules(factor_policy))
    return rules


def rules_by_names(names: Sequence[str], factor_policy: str = "all") -> list[Rewrite]:
    """Select rule families by name; knows the test fixtures too."""
    catalog = builtin_rules(factor_policy) + [_broken_rule()]
    known = {r.name for r in catalog}
    unknown = [n for n in names if n not in known]
    if unknown:
        raise EnginespaceError(f"unknown rule name(s): {', '.join(unknown)}")
    wanted = set(names)
    return [r for r in catalog if r.name in wanted]


@dataclass(frozen=True)
class RunLimits:
    max_iterations: int = 12
    max_nodes: int = 100_000
    max_classes: int = 100_000
    time_budget_s: float = 600.0

    def __post_init__(self):
        if self.max_iterations < 0:
            raise ValueError("max_iterations must be >= 0")
        if self.max_nodes < 1 or self.max_classes < 1 or self.time_budget_s <= 0:
            raise ValueError("limits must be positive")


@dataclass
class RunReport:
    iterations: int
    saturated: bool
    stop_reason: str
    nodes: list[int]  # per iteration, index 0 = seed graph
    classes: list[int]


def apply_rewrite(g: EGraph, rw: Rewrite) -> int:
    """Match everywhere, then apply; returns the number of changing unions."""
    matches = g.ematch(rw.lhs)
    changed = 0
    for cid, subst in matches:
        if not rw.condition(subst):
            continue
        for rhs in rw.build(subst):
            nid = g.instantiate(rhs, subst)
            _, did = g.union(cid, nid)
            changed += did
    return changed


def run(
    g: EGraph,
    rules: Sequence[Rewrite],
    limits: RunLimits = RunLimits(),
    observer: Callable[[EGraph, int], None] | None = None,
) -> RunReport:
    """Iterate (match all rules, apply all, rebuild) until saturation or a
    limit trips. Deterministic given the rule order."""
    g.rebuild()
    nodes_hist = [g.num_nodes]
    classes_hist = [g.num_classes]
    if observer is not None:
        observer(g, 0)
    start = time.monotonic()
    saturated = False
    reason = "max_iterations"
    iterations = 0
    for _ in range(limits.max_iterations):
        if time.monotonic() - start > limits.time_budget_s:
            reason = "time_budget"
            break
        # simultaneous matching before any application keeps iterations
        # independent of rule order
        batch = [(rw, g.ematch(rw.lhs)) for rw in rules]
        changed = 0
        for rw, matches in batch:
            for cid, subst in matches:
                if not rw.condition(subst):
                    continue
                for rhs in rw.build(subst):
                    nid = g.instantiate(rhs, subst)
                    _, did = g.union(cid, nid)
                    changed += did
        g.rebuild()
        iterations += 1
        nodes_hist.append(g.num_nodes)
        classes_hist.append(g.num_classes)
        if observer is not None:
            observer(g, iterations)
        if changed == 0:
            saturated = True
            reason = "saturated"
            break
        if g.num_nodes > limits.max_nodes:
            reason = "max_nodes"
            break
        if g.num_classes > limits.max_classes:
            reason = "max_classes"
            break
    return RunReport(
        iterations=iterations,
        saturated=saturated,
        stop_reason=reason,
        nodes=nodes_hist,
        classes=classes_hist,
    )
