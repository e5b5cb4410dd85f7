"""The engine/schedule term language.

A design is a tree over five node forms:

* ``Input(name)`` — a workload input.
* ``Engine(inst, args)`` — one hardware engine applied at its declared size.
* ``Seq(axis, factor, child)`` — a software loop: the designated output axis
  is split into ``factor`` sequential chunks, each produced by the child.
* ``Par(axis, factor, child)`` — ``factor`` spatial copies of the child
  hardware operating on chunks concurrently.
* ``Buffer(shape, child)`` — the child's output materialized into storage.

Engines are sized by per-kind parameters (relu/add: W; matmul: M, N, K;
conv2d: H, W, C, K, with H and W naming the *output* tile extents). The
split-axis table below records which output axis a Seq/Par may partition and
which engine parameter that split divides; keeping it in one place means the
typechecker and the rewrite catalog cannot disagree.

For elementwise kinds (relu, add) the splittable "axis 0" is the row-major
flattened element axis, so rank>1 tensors split exactly like vectors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Union

from .errors import (
    DivisibilityError,
    InvalidScheduleError,
    ParamShapeMismatchError,
    ParseError,
    RankError,
    ShapeMismatchError,
    UnboundInputError,
)
from .sexpr import Atom, expect_int, expect_list, expect_symbol, read_one
from .workload import OpKind, TensorShape


@dataclass(frozen=True)
class EngineDecl:
    kind: OpKind
    param_names: tuple[str, ...]


DECLS = {
    OpKind.RELU: EngineDecl(OpKind.RELU, ("W",)),
    OpKind.ADD: EngineDecl(OpKind.ADD, ("W",)),
    OpKind.MATMUL: EngineDecl(OpKind.MATMUL, ("M", "N", "K")),
    OpKind.CONV2D: EngineDecl(OpKind.CONV2D, ("H", "W", "C", "K")),
}

# Output axis -> engine parameter divided when that axis is split.
SPLIT_AXES: dict[OpKind, dict[int, str]] = {
    OpKind.RELU: {0: "W"},
    OpKind.ADD: {0: "W"},
    OpKind.MATMUL: {0: "M", 1: "N"},
    OpKind.CONV2D: {2: "H", 3: "W"},
}


@dataclass(frozen=True)
class EngineInstance:
    """A hardware engine with concrete size parameters."""

    kind: OpKind
    params: tuple[tuple[str, int], ...]  # in declaration order

    def __post_init__(self):
        decl = DECLS[self.kind]
        names = tuple(n for n, _ in self.params)
        if names != decl.param_names:
            raise ParamShapeMismatchError(
                f"{self.kind} engine takes parameters {decl.param_names}, got {names}"
            )
        if any(v < 1 for _, v in self.params):
            raise ParamShapeMismatchError(f"engine parameters must be >= 1: {self.params}")

    @classmethod
    def make(cls, kind: OpKind, **params: int) -> "EngineInstance":
        decl = DECLS[kind]
        missing = set(decl.param_names) - set(params)
        if missing:
            raise ParamShapeMismatchError(f"{kind} engine missing parameters {sorted(missing)}")
        return cls(kind, tuple((n, params[n]) for n in decl.param_names))

    def param(self, name: str) -> int:
        for n, v in self.params:
            if n == name:
                return v
        raise KeyError(name)

    def with_param(self, name: str, value: int) -> "EngineInstance":
        return EngineInstance(self.kind, tuple((n, value if n == name else v) for n, v in self.params))

    def __str__(self):
        inner = ", ".join(f"{n}={v}" for n, v in self.params)
        return f"{self.kind}({inner})"


@dataclass(frozen=True)
class Input:
    name: str


@dataclass(frozen=True)
class Engine:
    inst: EngineInstance
    children: tuple["ScheduleTerm", ...]

    def __post_init__(self):
        if len(self.children) != len(_KERNEL_ARITY[self.inst.kind]):
            raise InvalidScheduleError(
                f"{self.inst.kind} engine takes {len(_KERNEL_ARITY[self.inst.kind])} "
                f"argument(s), got {len(self.children)}"
            )


@dataclass(frozen=True)
class Seq:
    axis: int
    factor: int
    child: "ScheduleTerm"

    def __post_init__(self):
        _check_split(self.axis, self.factor)


@dataclass(frozen=True)
class Par:
    axis: int
    factor: int
    child: "ScheduleTerm"

    def __post_init__(self):
        _check_split(self.axis, self.factor)


@dataclass(frozen=True)
class Buffer:
    shape: TensorShape
    child: "ScheduleTerm"


ScheduleTerm = Union[Input, Engine, Seq, Par, Buffer]

_KERNEL_ARITY = {
    OpKind.RELU: ("data",),
    OpKind.ADD: ("lhs", "rhs"),
    OpKind.MATMUL: ("lhs", "rhs"),
    OpKind.CONV2D: ("data", "kernel"),
}


def _check_split(axis: int, factor: int):
    if axis < 0:
        raise InvalidScheduleError(f"split axis must be >= 0, got {axis}")
    if factor < 2:
        # factor-1 loops are identity and would litter the space
        raise InvalidScheduleError(f"split factor must be >= 2, got {factor}")


def kernel_out_shape(kind: OpKind, arg_shapes: list[TensorShape]) -> TensorShape:
    """Full output shape of one kernel given full argument shapes."""
    if kind is OpKind.RELU:
        return arg_shapes[0]
    if kind is OpKind.ADD:
        a, b = arg_shapes
        if a != b:
            raise ShapeMismatchError(f"add requires equal shapes, got {a} and {b}")
        return a
    if kind is OpKind.MATMUL:
        a, b = arg_shapes
        if a.rank != 2 or b.rank != 2:
            raise RankError(f"matmul requires rank-2 operands, got {a} and {b}")
        if a.dims[1] != b.dims[0]:
            raise ShapeMismatchError(f"matmul inner extents differ: {a} vs {b}")
        return TensorShape((a.dims[0], b.dims[1]))
    d, k = arg_shapes
    if d.rank != 4 or k.rank != 4:
        raise RankError(f"conv2d requires rank-4 operands, got {d} and {k}")
    if d.dims[1] != k.dims[1]:
        raise ShapeMismatchError(f"conv2d channel mismatch: {d} vs {k}")
    if d.dims[2] < k.dims[2] or d.dims[3] < k.dims[3]:
        raise ShapeMismatchError(f"conv2d kernel {k} larger than data {d}")
    return TensorShape((d.dims[0], k.dims[0], d.dims[2] - k.dims[2] + 1, d.dims[3] - k.dims[3] + 1))


def axis_extent(kind: OpKind, out_shape: TensorShape, axis: int) -> int:
    """Extent of a splittable output axis; flattened for elementwise kinds."""
    if kind in (OpKind.RELU, OpKind.ADD):
        if axis != 0:
            raise InvalidScheduleError(f"{kind} has no split axis {axis}")
        return out_shape.elements
    return out_shape.dims[axis]


def check_engine_params(
    inst: EngineInstance, arg_shapes: list[TensorShape], tile_extents: Mapping[int, int]
) -> None:
    """Check an instance against full argument shapes and per-axis tile extents.

    ``tile_extents`` gives, per splittable axis, the extent the engine itself
    must cover after enclosing splits have carved the output up.
    """
    kind = inst.kind
    for axis, pname in SPLIT_AXES[kind].items():
        if inst.param(pname) != tile_extents[axis]:
            raise ParamShapeMismatchError(
                f"{inst} parameter {pname}={inst.param(pname)} must equal the "
                f"tile extent {tile_extents[axis]} on axis {axis}"
            )
    if kind is OpKind.MATMUL:
        if inst.param("K") != arg_shapes[0].dims[1]:
            raise ParamShapeMismatchError(
                f"{inst} reduction size K must equal {arg_shapes[0].dims[1]}"
            )
    elif kind is OpKind.CONV2D:
        _, kernel = arg_shapes
        if kernel.dims[2] != kernel.dims[3]:
            raise ShapeMismatchError(f"conv2d engines require square kernels, got {kernel}")
        if inst.param("C") != kernel.dims[1] or inst.param("K") != kernel.dims[2]:
            raise ParamShapeMismatchError(f"{inst} C/K must match kernel {kernel}")


def schedule_chain(t: ScheduleTerm) -> tuple[list[tuple[type, int, int]], Engine]:
    """Decompose a schedule into its outer Seq/Par wrappers and the engine."""
    chain: list[tuple[type, int, int]] = []
    cur = t
    while isinstance(cur, (Seq, Par)):
        chain.append((type(cur), cur.axis, cur.factor))
        cur = cur.child
    if not isinstance(cur, Engine):
        raise InvalidScheduleError(
            f"Seq/Par must wrap an engine, found {type(cur).__name__} at the core"
        )
    return chain, cur


def typecheck_term(t: ScheduleTerm, env: Mapping[str, TensorShape]) -> TensorShape:
    """Return the output shape of a complete design, or raise.

    Engine arguments must be inputs or buffers; within a schedule region the
    enclosing split factors must divide the output extents exactly, and the
    engine parameters must equal what is left after all splits.
    """
    if isinstance(t, Input):
        if t.name not in env:
            raise UnboundInputError(f"input {t.name!r} is not bound")
        return env[t.name]
    if isinstance(t, Buffer):
        child_shape = typecheck_term(t.child, env)
        if child_shape != t.shape:
            raise ShapeMismatchError(f"buffer shape {t.shape} != child shape {child_shape}")
        return t.shape
    return _check_schedule(t, env)


def _check_schedule(t: ScheduleTerm, env: Mapping[str, TensorShape]) -> TensorShape:
    chain, engine = schedule_chain(t)
    arg_shapes = []
    for arg in engine.children:
        if isinstance(arg, (Engine, Seq, Par)):
            raise InvalidScheduleError(
                "engine output must pass through a buffer before feeding another engine"
            )
        arg_shapes.append(typecheck_term(arg, env))
    kind = engine.inst.kind
    full = kernel_out_shape(kind, arg_shapes)
    table = SPLIT_AXES[kind]
    remaining = {axis: axis_extent(kind, full, axis) for axis in table}
    for _, axis, factor in chain:  # outermost first
        if axis not in table:
            raise InvalidScheduleError(f"{kind} has no split axis {axis}")
        if remaining[axis] % factor != 0:
            raise DivisibilityError(axis, factor, remaining[axis])
        remaining[axis] //= factor
    check_engine_params(engine.inst, arg_shapes, remaining)
    return full


def full_size_instance(kind: OpKind, arg_shapes: list[TensorShape]) -> EngineInstance:
    """The engine sized to compute one whole kernel invocation at once."""
    out = kernel_out_shape(kind, arg_shapes)
    if kind in (OpKind.RELU, OpKind.ADD):
        return EngineInstance.make(kind, W=out.elements)
    if kind is OpKind.MATMUL:
        return EngineInstance.make(kind, M=out.dims[0], N=out.dims[1], K=arg_shapes[0].dims[1])
    _, kernel = arg_shapes
    if kernel.dims[2] != kernel.dims[3]:
        raise ShapeMismatchError(f"conv2d engines require square kernels, got {kernel}")
    return EngineInstance.make(
        kind, H=out.dims[2], W=out.dims[3], C=kernel.dims[1], K=kernel.dims[2]
    )


def hardware_inventory(t: ScheduleTerm) -> dict[EngineInstance, int]:
    """Engine instances with replication counts.

    Par multiplies everything beneath it (replicated hardware); Seq reuses
    one unit and multiplies nothing.
    """
    inv: dict[EngineInstance, int] = {}

    def go(term: ScheduleTerm, mult: int):
        if isinstance(term, Input):
            return
        if isinstance(term, Buffer):
            go(term.child, mult)
        elif isinstance(term, Seq):
            go(term.child, mult)
        elif isinstance(term, Par):
            go(term.child, mult * term.factor)
        else:
            inv[term.inst] = inv.get(term.inst, 0) + mult
            for c in term.children:
                go(c, mult)

    go(t, 1)
    return inv


def iter_subterms(t: ScheduleTerm) -> Iterator[ScheduleTerm]:
    yield t
    if isinstance(t, (Seq, Par, Buffer)):
        yield from iter_subterms(t.child)
    elif isinstance(t, Engine):
        for c in t.children:
            yield from iter_subterms(c)


def term_size(t: ScheduleTerm) -> int:
    return sum(1 for _ in iter_subterms(t))


def term_depth(t: ScheduleTerm) -> int:
    if isinstance(t, Input):
        return 1
    if isinstance(t, Engine):
        return 1 + max(term_depth(c) for c in t.children)
    return 1 + term_depth(t.child)


def print_term(t: ScheduleTerm) -> str:
    if isinstance(t, Input):
        return t.name
    if isinstance(t, Engine):
        params = " ".join(f"({n} {v})" for n, v in t.inst.params)
        args = " ".join(print_term(c) for c in t.children)
        return f"(engine {t.inst.kind} {params} {args})"
    if isinstance(t, Seq):
        return f"(seq {t.axis} {t.factor} {print_term(t.child)})"
    if isinstance(t, Par):
        return f"(par {t.axis} {t.factor} {print_term(t.child)})"
    return f"(buffer {t.shape} {print_term(t.child)})"


def parse_term(text: str) -> ScheduleTerm:
    """Inverse of print_term (modulo whitespace)."""
    return _term_from_sexpr(read_one(text))


def _term_from_sexpr(expr) -> ScheduleTerm:
    if isinstance(expr, Atom):
        name = expect_symbol(expr, "an input name")
        return Input(name)
    lst = expect_list(expr, "a term")
    if not lst.items:
        raise ParseError("empty term", lst.line, lst.col)
    head = expect_symbol(lst.items[0], "a term constructor")
    if head in ("seq", "par"):
        if len(lst.items) != 4:
            raise ParseError(f"{head} takes axis, factor, child", lst.line, lst.col)
        axis = expect_int(lst.items[1], "an axis")
        factor = expect_int(lst.items[2], "a factor")
        child = _term_from_sexpr(lst.items[3])
        try:
            return Seq(axis, factor, child) if head == "seq" else Par(axis, factor, child)
        except InvalidScheduleError as e:
            raise ParseError(str(e), lst.line, lst.col) from None
    if head == "buffer":
        if len(lst.items) != 3:
            raise ParseError("buffer takes shape, child", lst.line, lst.col)
        shape_lst = expect_list(lst.items[1], "a shape")
        dims = tuple(expect_int(i, "a shape extent") for i in shape_lst.items)
        try:
            shape = TensorShape(dims)
        except (RankError, ShapeMismatchError) as e:
            raise ParseError(str(e), shape_lst.line, shape_lst.col) from None
        return Buffer(shape, _term_from_sexpr(lst.items[2]))
    if head == "engine":
        if len(lst.items) < 2:
            raise ParseError("engine takes a kind", lst.line, lst.col)
        kind_name = expect_symbol(lst.items[1], "an engine kind")
        try:
            kind = OpKind(kind_name)
        except ValueError:
            raise ParseError(f"unknown engine kind {kind_name!r}", lst.line, lst.col) from None
        decl = DECLS[kind]
        n_params = len(decl.param_names)
        param_items = lst.items[2 : 2 + n_params]
        if len(param_items) != n_params:
            raise ParseError(
                f"{kind} engine takes parameters {decl.param_names}", lst.line, lst.col
            )
        params = {}
        for it in param_items:
            pl = expect_list(it, "a (name value) parameter")
            if len(pl.items) != 2:
                raise ParseError("parameter must be (name value)", pl.line, pl.col)
            pname = expect_symbol(pl.items[0], "a parameter name")
            pval = expect_int(pl.items[1], "a parameter value")
            if pname in params:
                raise ParseError(f"duplicate parameter {pname!r}", pl.line, pl.col)
            params[pname] = pval
        if set(params) != set(decl.param_names):
            raise ParseError(
                f"{kind} engine takes parameters {decl.param_names}", lst.line, lst.col
            )
        args = tuple(_term_from_sexpr(it) for it in lst.items[2 + n_params :])
        try:
            inst = EngineInstance.make(kind, **params)
            return Engine(inst, args)
        except (ParamShapeMismatchError, InvalidScheduleError) as e:
            raise ParseError(str(e), lst.line, lst.col) from None
    raise ParseError(f"unknown term constructor {head!r}", lst.line, lst.col)


def divisors(n: int) -> list[int]:
    """Divisors of n that are >= 2, ascending."""
    small, large = [], []
    for d in range(1, math.isqrt(n) + 1):
        if n % d == 0:
            small.append(d)
            if d != n // d:
                large.append(n // d)
    return [d for d in small + sorted(large) if d >= 2]
