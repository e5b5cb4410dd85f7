"""Workload frontend: parse and shape-check the input dataflow language.

A workload is a DAG of tensor operator calls over named inputs, written as
s-expressions:

    (workload
      (input d (1 3 18 18))
      (input w (8 3 3 3))
      (output (conv2d d w)))

The operator set is closed: relu, add, matmul, conv2d. Shape inference is a
separate pass (`infer_shapes`) so parse errors and shape errors stay distinct.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, replace

from .errors import (
    DuplicateNameError,
    ParseError,
    RankError,
    ShapeMismatchError,
    UnboundNameError,
    UnknownOpError,
)
from .sexpr import Atom, expect_int, expect_list, expect_symbol, read_one

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class OpKind(enum.Enum):
    RELU = "relu"
    ADD = "add"
    MATMUL = "matmul"
    CONV2D = "conv2d"

    def __str__(self):
        return self.value


ARITY = {OpKind.RELU: 1, OpKind.ADD: 2, OpKind.MATMUL: 2, OpKind.CONV2D: 2}


@dataclass(frozen=True)
class TensorShape:
    """Extents per axis; rank 1..4, every extent >= 1."""

    dims: tuple[int, ...]

    def __post_init__(self):
        if not 1 <= len(self.dims) <= 4:
            raise RankError(f"rank must be between 1 and 4, got {len(self.dims)}")
        if any(d < 1 for d in self.dims):
            raise ShapeMismatchError(f"extents must be positive, got {self.dims}")

    @property
    def rank(self) -> int:
        return len(self.dims)

    @property
    def elements(self) -> int:
        return math.prod(self.dims)

    def __str__(self):
        return "(" + " ".join(str(d) for d in self.dims) + ")"


@dataclass(frozen=True)
class WorkloadNode:
    id: str
    kind: OpKind
    args: tuple[str, ...]  # input names or ids of earlier nodes
    out_shape: TensorShape | None = None


@dataclass(frozen=True, eq=True)
class Workload:
    inputs: dict[str, TensorShape]
    nodes: tuple[WorkloadNode, ...]
    output: str

    __hash__ = None  # dict field; value equality only

    def node(self, node_id: str) -> WorkloadNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    @property
    def output_shape(self) -> TensorShape | None:
        return self.node(self.output).out_shape


def _parse_shape(expr) -> TensorShape:
    lst = expect_list(expr, "a shape")
    if not lst.items:
        raise ParseError("empty shape", lst.line, lst.col, expected="positive integers")
    dims = tuple(expect_int(it, "a shape extent") for it in lst.items)
    if any(d < 1 for d in dims):
        raise ParseError("shape extents must be >= 1", lst.line, lst.col)
    if len(dims) > 4:
        raise ParseError("rank must be <= 4", lst.line, lst.col)
    return TensorShape(dims)


def _parse_name(expr, what: str) -> str:
    name = expect_symbol(expr, what)
    if not _NAME_RE.match(name):
        raise ParseError(f"invalid name {name!r}", expr.line, expr.col)
    return name


class _ExprBuilder:
    """Turns nested operator applications into a topologically ordered node list."""

    def __init__(self, inputs):
        self.inputs = inputs
        self.nodes: list[WorkloadNode] = []

    def build(self, expr) -> str:
        if isinstance(expr, Atom):
            name = _parse_name(expr, "an input reference")
            if name not in self.inputs:
                raise UnboundNameError(f"unbound name {name!r}", expr.line, expr.col)
            return name
        lst = expect_list(expr, "an operator application")
        if not lst.items:
            raise ParseError("empty application", lst.line, lst.col, expected="operator name")
        op_name = expect_symbol(lst.items[0], "an operator name")
        try:
            kind = OpKind(op_name)
        except ValueError:
            raise UnknownOpError(
                f"unknown operator {op_name!r}", lst.items[0].line, lst.items[0].col
            ) from None
        args = tuple(self.build(a) for a in lst.items[1:])
        if len(args) != ARITY[kind]:
            raise ParseError(
                f"{op_name} takes {ARITY[kind]} argument(s), got {len(args)}",
                lst.line,
                lst.col,
            )
        node_id = f"%{len(self.nodes)}"
        self.nodes.append(WorkloadNode(node_id, kind, args))
        return node_id


def parse_workload(text: str) -> Workload:
    """Parse workload text. References are resolved; shapes are not inferred."""
    top = expect_list(read_one(text), "a workload")
    if not top.items or expect_symbol(top.items[0], "the workload keyword") != "workload":
        raise ParseError("expected (workload ...)", top.line, top.col, expected="'workload'")

    inputs: dict[str, TensorShape] = {}
    output_expr = None
    for item in top.items[1:]:
        lst = expect_list(item, "an input or output form")
        if not lst.items:
            raise ParseError("empty form", lst.line, lst.col)
        head = expect_symbol(lst.items[0], "'input' or 'output'")
        if head == "input":
            if output_expr is not None:
                raise ParseError("input declared after output", lst.line, lst.col)
            if len(lst.items) != 3:
                raise ParseError("input takes a name and a shape", lst.line, lst.col)
            name = _parse_name(lst.items[1], "an input name")
            if name in inputs:
                raise DuplicateNameError(
                    f"duplicate input {name!r}", lst.items[1].line, lst.items[1].col
                )
            inputs[name] = _parse_shape(lst.items[2])
        elif head == "output":
            if output_expr is not None:
                raise ParseError("more than one output", lst.line, lst.col)
            if len(lst.items) != 2:
                raise ParseError("output takes one expression", lst.line, lst.col)
            output_expr = lst.items[1]
        else:
            raise ParseError(
                f"unexpected form {head!r}", lst.line, lst.col, expected="'input' or 'output'"
            )
    if output_expr is None:
        raise ParseError("workload has no output", top.line, top.col)
    if isinstance(output_expr, Atom):
        # A bare input as the output would be a workload with no operators.
        raise ParseError(
            "output must be an operator application", output_expr.line, output_expr.col
        )

    builder = _ExprBuilder(inputs)
    out_id = builder.build(output_expr)
    return Workload(inputs=inputs, nodes=tuple(builder.nodes), output=out_id)


def print_workload(w: Workload) -> str:
    """Pretty-print; reparsing the result yields a structurally equal workload."""
    by_id = {n.id: n for n in w.nodes}

    def expr(ref: str) -> str:
        if ref in by_id:
            n = by_id[ref]
            return "(" + " ".join([n.kind.value] + [expr(a) for a in n.args]) + ")"
        return ref

    parts = [f"(input {name} {shape})" for name, shape in w.inputs.items()]
    parts.append(f"(output {expr(w.output)})")
    return "(workload " + " ".join(parts) + ")"


def _infer_node(kind: OpKind, arg_shapes: list[TensorShape], node_id: str) -> TensorShape:
    if kind is OpKind.RELU:
        return arg_shapes[0]
    if kind is OpKind.ADD:
        a, b = arg_shapes
        if a != b:
            raise ShapeMismatchError(f"{node_id}: add requires equal shapes, got {a} and {b}")
        return a
    if kind is OpKind.MATMUL:
        a, b = arg_shapes
        if a.rank != 2 or b.rank != 2:
            raise RankError(f"{node_id}: matmul requires rank-2 operands, got {a} and {b}")
        if a.dims[1] != b.dims[0]:
            raise ShapeMismatchError(f"{node_id}: matmul inner extents differ: {a} vs {b}")
        return TensorShape((a.dims[0], b.dims[1]))
    # conv2d, NCHW data against OCHW kernel, stride 1, no padding
    d, k = arg_shapes
    if d.rank != 4 or k.rank != 4:
        raise RankError(f"{node_id}: conv2d requires rank-4 operands, got {d} and {k}")
    b_, c, h, w_ = d.dims
    o, kc, kh, kw = k.dims
    if c != kc:
        raise ShapeMismatchError(f"{node_id}: channel mismatch: data {d} vs kernel {k}")
    if h < kh or w_ < kw:
        raise ShapeMismatchError(f"{node_id}: kernel {k} larger than data {d}")
    return TensorShape((b_, o, h - kh + 1, w_ - kw + 1))


def infer_shapes(w: Workload) -> Workload:
    """Fill in every node's output shape. Idempotent."""
    shapes: dict[str, TensorShape] = dict(w.inputs)
    nodes = []
    for n in w.nodes:
        try:
            arg_shapes = [shapes[a] for a in n.args]
        except KeyError as e:
            raise ShapeMismatchError(f"{n.id}: reference to undefined {e.args[0]!r}") from None
        out = _infer_node(n.kind, arg_shapes, n.id)
        shapes[n.id] = out
        nodes.append(replace(n, out_shape=out))
    return Workload(inputs=dict(w.inputs), nodes=tuple(nodes), output=w.output)
