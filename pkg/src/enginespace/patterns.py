"""Patterns over schedule terms.

A pattern mirrors the term grammar with two kinds of holes: term variables
(`?x`, matching a whole subterm or e-class) and scalar variables (`?k`,
matching an embedded integer, optionally guarded by a predicate). The same
variable name must bind consistently everywhere it appears.

Patterns are matched two ways: against concrete terms (used by the rule
soundness tests) and against e-graph classes (see EGraph.ematch).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

from .engine_ir import DECLS, Buffer, Engine, EngineInstance, Input, Par, ScheduleTerm, Seq
from .errors import ParseError
from .sexpr import Atom, expect_list, expect_symbol, read_one
from .workload import OpKind, TensorShape


@dataclass(frozen=True)
class TermVar:
    name: str


@dataclass(frozen=True)
class ScalarVar:
    name: str
    pred: Optional[Callable[[int], bool]] = field(default=None, compare=False)


Scalar = Union[int, ScalarVar]


@dataclass(frozen=True)
class PInput:
    name: str


@dataclass(frozen=True)
class PEngine:
    kind: OpKind
    params: tuple[tuple[str, Scalar], ...]
    args: tuple["Pattern", ...]


@dataclass(frozen=True)
class PSeq:
    axis: Scalar
    factor: Scalar
    child: "Pattern"


@dataclass(frozen=True)
class PPar:
    axis: Scalar
    factor: Scalar
    child: "Pattern"


@dataclass(frozen=True)
class PBuffer:
    shape: TensorShape | ScalarVar
    child: "Pattern"


Pattern = Union[TermVar, PInput, PEngine, PSeq, PPar, PBuffer]

# A substitution maps term-variable names to subterms (term matching) or
# e-class ids (e-matching), and scalar-variable names to ints/shapes.
Subst = dict


def bind_scalar(pat: Scalar, value, subst: Subst) -> Optional[Subst]:
    """Extend subst with a scalar binding, or return None on mismatch."""
    if isinstance(pat, ScalarVar):
        if pat.pred is not None and not pat.pred(value):
            return None
        if pat.name in subst:
            return subst if subst[pat.name] == value else None
        out = dict(subst)
        out[pat.name] = value
        return out
    return subst if pat == value else None


def resolve_scalar(pat: Scalar, subst: Subst) -> int:
    if isinstance(pat, ScalarVar):
        return subst[pat.name]
    return pat


def match_term(pattern: Pattern, term: ScheduleTerm, subst: Optional[Subst] = None) -> Optional[Subst]:
    """Match a pattern against a concrete term; None if it does not match."""
    subst = {} if subst is None else subst
    if isinstance(pattern, TermVar):
        if pattern.name in subst:
            return subst if subst[pattern.name] == term else None
        out = dict(subst)
        out[pattern.name] = term
        return out
    if isinstance(pattern, PInput):
        return subst if isinstance(term, Input) and term.name == pattern.name else None
    if isinstance(pattern, PEngine):
        if not isinstance(term, Engine) or term.inst.kind != pattern.kind:
            return None
        if len(term.children) != len(pattern.args):
            return None
        for (pname, pval) in pattern.params:
            subst = bind_scalar(pval, term.inst.param(pname), subst)
            if subst is None:
                return None
        for parg, targ in zip(pattern.args, term.children):
            subst = match_term(parg, targ, subst)
            if subst is None:
                return None
        return subst
    if isinstance(pattern, (PSeq, PPar)):
        want = Seq if isinstance(pattern, PSeq) else Par
        if not isinstance(term, want):
            return None
        subst = bind_scalar(pattern.axis, term.axis, subst)
        if subst is None:
            return None
        subst = bind_scalar(pattern.factor, term.factor, subst)
        if subst is None:
            return None
        return match_term(pattern.child, term.child, subst)
    if isinstance(pattern, PBuffer):
        if not isinstance(term, Buffer):
            return None
        if isinstance(pattern.shape, ScalarVar):
            subst = bind_scalar(pattern.shape, term.shape, subst)
            if subst is None:
                return None
        elif pattern.shape != term.shape:
            return None
        return match_term(pattern.child, term.child, subst)
    raise TypeError(f"not a pattern: {pattern!r}")


def instantiate_term(pattern: Pattern, subst: Subst) -> ScheduleTerm:
    """Build a concrete term from a pattern under a term-level substitution."""
    if isinstance(pattern, TermVar):
        return subst[pattern.name]
    if isinstance(pattern, PInput):
        return Input(pattern.name)
    if isinstance(pattern, PEngine):
        params = {n: resolve_scalar(v, subst) for n, v in pattern.params}
        inst = EngineInstance.make(pattern.kind, **params)
        return Engine(inst, tuple(instantiate_term(a, subst) for a in pattern.args))
    if isinstance(pattern, PSeq):
        return Seq(
            resolve_scalar(pattern.axis, subst),
            resolve_scalar(pattern.factor, subst),
            instantiate_term(pattern.child, subst),
        )
    if isinstance(pattern, PPar):
        return Par(
            resolve_scalar(pattern.axis, subst),
            resolve_scalar(pattern.factor, subst),
            instantiate_term(pattern.child, subst),
        )
    if isinstance(pattern, PBuffer):
        shape = subst[pattern.shape.name] if isinstance(pattern.shape, ScalarVar) else pattern.shape
        return Buffer(shape, instantiate_term(pattern.child, subst))
    raise TypeError(f"not a pattern: {pattern!r}")


def parse_pattern(text: str) -> Pattern:
    """Pattern syntax is the term syntax plus ?vars, e.g.
    ``(engine relu (W ?w) ?x)`` or ``(seq 0 ?k ?e)``."""
    return _pattern_from_sexpr(read_one(text))


def _scalar_from_sexpr(expr) -> Scalar:
    if isinstance(expr, Atom):
        if isinstance(expr.value, int):
            return expr.value
        if expr.value.startswith("?"):
            return ScalarVar(expr.value[1:])
    raise ParseError("expected an integer or ?var", expr.line, expr.col)


def _pattern_from_sexpr(expr) -> Pattern:
    if isinstance(expr, Atom):
        name = expect_symbol(expr, "a name or ?var")
        if name.startswith("?"):
            return TermVar(name[1:])
        return PInput(name)
    lst = expect_list(expr, "a pattern")
    if not lst.items:
        raise ParseError("empty pattern", lst.line, lst.col)
    head = expect_symbol(lst.items[0], "a pattern constructor")
    if head in ("seq", "par"):
        if len(lst.items) != 4:
            raise ParseError(f"{head} takes axis, factor, child", lst.line, lst.col)
        axis = _scalar_from_sexpr(lst.items[1])
        factor = _scalar_from_sexpr(lst.items[2])
        child = _pattern_from_sexpr(lst.items[3])
        return PSeq(axis, factor, child) if head == "seq" else PPar(axis, factor, child)
    if head == "buffer":
        if len(lst.items) != 3:
            raise ParseError("buffer takes shape, child", lst.line, lst.col)
        shape_expr = lst.items[1]
        if isinstance(shape_expr, Atom) and isinstance(shape_expr.value, str) and shape_expr.value.startswith("?"):
            shape: TensorShape | ScalarVar = ScalarVar(shape_expr.value[1:])
        else:
            shape_lst = expect_list(shape_expr, "a shape")
            shape = TensorShape(tuple(int(a.value) for a in shape_lst.items))
        return PBuffer(shape, _pattern_from_sexpr(lst.items[2]))
    if head == "engine":
        kind = OpKind(expect_symbol(lst.items[1], "an engine kind"))
        decl = DECLS[kind]
        n_params = len(decl.param_names)
        params = []
        for it in lst.items[2 : 2 + n_params]:
            pl = expect_list(it, "a (name value) parameter")
            params.append((expect_symbol(pl.items[0], "a parameter name"), _scalar_from_sexpr(pl.items[1])))
        args = tuple(_pattern_from_sexpr(it) for it in lst.items[2 + n_params :])
        return PEngine(kind, tuple(params), args)
    raise ParseError(f"unknown pattern constructor {head!r}", lst.line, lst.col)
