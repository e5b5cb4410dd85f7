import pytest
from hypothesis import given
from hypothesis import strategies as st

from enginespace.errors import (
    DuplicateNameError,
    ParseError,
    RankError,
    ShapeMismatchError,
    UnboundNameError,
    UnknownOpError,
)
from enginespace.workload import (
    OpKind,
    TensorShape,
    infer_shapes,
    parse_workload,
    print_workload,
)

from oracles import brute_conv2d
import numpy as np


def test_parse_minimal():
    w = parse_workload("(workload (input x (128)) (output (relu x)))")
    assert list(w.inputs) == ["x"]
    assert w.inputs["x"] == TensorShape((128,))
    assert len(w.nodes) == 1
    assert w.nodes[0].kind is OpKind.RELU
    assert w.nodes[0].args == ("x",)
    assert w.output == w.nodes[0].id


def test_parse_conv_workload():
    w = parse_workload(
        "(workload (input d (1 3 18 18)) (input w (3 3 3 3)) (output (conv2d d w)))"
    )
    assert len(w.inputs) == 2
    assert len(w.nodes) == 1
    assert w.nodes[0].kind is OpKind.CONV2D


def test_parse_unknown_op():
    with pytest.raises(UnknownOpError):
        parse_workload("(workload (input x (8)) (output (foo x)))")


def test_parse_unbound_name():
    with pytest.raises(UnboundNameError):
        parse_workload("(workload (input x (8)) (output (relu y)))")


def test_parse_duplicate_input():
    with pytest.raises(DuplicateNameError):
        parse_workload("(workload (input x (8)) (input x (4)) (output (relu x)))")


def test_parse_arity_error():
    with pytest.raises(ParseError):
        parse_workload("(workload (input x (8)) (output (relu x x)))")


def test_parse_bare_output_rejected():
    with pytest.raises(ParseError):
        parse_workload("(workload (input x (8)) (output x))")


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as exc:
        parse_workload("(workload\n  (input x (8))\n  (output (relu x))")
    assert exc.value.line is not None and exc.value.col is not None
    assert "line" in str(exc.value)


def test_trailing_input_rejected():
    with pytest.raises(ParseError):
        parse_workload("(workload (input x (8)) (output (relu x))) junk")


def test_comments_are_skipped():
    w = parse_workload("; a comment\n(workload (input x (8)) ; inline\n (output (relu x)))")
    assert len(w.nodes) == 1


def test_nested_expression_builds_dag_in_order():
    w = parse_workload(
        "(workload (input a (8)) (input b (8)) (output (add (relu a) (relu b))))"
    )
    assert [n.kind for n in w.nodes] == [OpKind.RELU, OpKind.RELU, OpKind.ADD]
    add = w.nodes[-1]
    assert add.args == (w.nodes[0].id, w.nodes[1].id)


def test_infer_relu_preserves_shape():
    w = infer_shapes(parse_workload("(workload (input x (128)) (output (relu x)))"))
    assert w.output_shape == TensorShape((128,))


def test_infer_matmul():
    w = infer_shapes(
        parse_workload("(workload (input a (16 16)) (input b (16 16)) (output (matmul a b)))")
    )
    assert w.output_shape == TensorShape((16, 16))


def test_infer_conv_matches_brute_force_oracle():
    w = infer_shapes(
        parse_workload(
            "(workload (input d (1 3 18 18)) (input w (8 3 3 3)) (output (conv2d d w)))"
        )
    )
    assert w.output_shape == TensorShape((1, 8, 16, 16))
    out = brute_conv2d(np.ones((1, 3, 18, 18), np.int64), np.ones((8, 3, 3, 3), np.int64))
    assert out.shape == w.output_shape.dims


def test_infer_add_shape_mismatch():
    w = parse_workload("(workload (input a (8)) (input b (4)) (output (add a b)))")
    with pytest.raises(ShapeMismatchError):
        infer_shapes(w)


def test_infer_matmul_inner_mismatch():
    w = parse_workload("(workload (input a (4 5)) (input b (6 4)) (output (matmul a b)))")
    with pytest.raises(ShapeMismatchError):
        infer_shapes(w)


def test_infer_matmul_rank_error():
    w = parse_workload("(workload (input a (4)) (input b (4 4)) (output (matmul a b)))")
    with pytest.raises(RankError):
        infer_shapes(w)


def test_infer_conv_kernel_too_large():
    w = parse_workload("(workload (input d (1 1 2 2)) (input k (1 1 3 3)) (output (conv2d d k)))")
    with pytest.raises(ShapeMismatchError):
        infer_shapes(w)


def test_tensor_shape_invariants():
    with pytest.raises(RankError):
        TensorShape(())
    with pytest.raises(RankError):
        TensorShape((1, 2, 3, 4, 5))
    with pytest.raises(ShapeMismatchError):
        TensorShape((0,))


# ------------------------------------------------------------- properties

_names = st.sampled_from(["a", "b", "c", "d"])
_shape = st.lists(st.integers(1, 8), min_size=1, max_size=4).map(tuple)


@st.composite
def elementwise_workloads(draw):
    """Random relu/add trees over a shared shape (keeps shapes consistent)."""
    shape = draw(_shape)
    names = draw(st.lists(_names, min_size=1, max_size=4, unique=True))

    def expr(depth):
        if depth == 0 or draw(st.booleans()):
            return draw(st.sampled_from(names))
        if draw(st.booleans()):
            return f"(relu {expr(depth - 1)})"
        return f"(add {expr(depth - 1)} {expr(depth - 1)})"

    body = f"(relu {expr(draw(st.integers(0, 3)))})"
    decls = " ".join(f"(input {n} ({' '.join(map(str, shape))}))" for n in names)
    return f"(workload {decls} (output {body}))"


@given(elementwise_workloads())
def test_print_parse_round_trip(src):
    w = parse_workload(src)
    assert parse_workload(print_workload(w)) == w


@given(elementwise_workloads())
def test_infer_idempotent(src):
    w1 = infer_shapes(parse_workload(src))
    assert infer_shapes(w1) == w1


@given(st.permutations(["a", "b", "c"]))
def test_input_permutation_same_dag(order):
    decls = " ".join(f"(input {n} (8))" for n in order)
    w = parse_workload(f"(workload {decls} (output (add (relu a) (add b c))))")
    base = parse_workload(
        "(workload (input a (8)) (input b (8)) (input c (8)) (output (add (relu a) (add b c))))"
    )
    assert w.nodes == base.nodes
    assert w.output == base.output
    assert w.inputs == base.inputs
