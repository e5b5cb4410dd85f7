import pytest

from enginespace.egraph import EGraph
from enginespace.engine_ir import Buffer, Engine, EngineInstance, Input, Seq
from enginespace.errors import ParseError
from enginespace.lowering import lower
from enginespace.patterns import (
    PBuffer,
    PEngine,
    PInput,
    PSeq,
    ScalarVar,
    TermVar,
    instantiate_term,
    match_term,
    parse_pattern,
)
from enginespace.workload import OpKind, TensorShape, infer_shapes, parse_workload


def relu(w, arg=Input("x")):
    return Engine(EngineInstance.make(OpKind.RELU, W=w), (arg,))


def test_parse_pattern_forms():
    p = parse_pattern("(seq 0 ?k (engine relu (W ?w) ?x))")
    assert p == PSeq(0, ScalarVar("k"), PEngine(OpKind.RELU, (("W", ScalarVar("w")),), (TermVar("x"),)))
    assert parse_pattern("x") == PInput("x")
    assert parse_pattern("?e") == TermVar("e")
    assert parse_pattern("(buffer ?s ?e)") == PBuffer(ScalarVar("s"), TermVar("e"))
    with pytest.raises(ParseError):
        parse_pattern("(seq 0 two ?e)")


def test_match_term_binds_scalars_and_terms():
    t = Seq(0, 2, relu(64))
    subst = match_term(parse_pattern("(seq ?a ?k (engine relu (W ?w) ?x))"), t)
    assert subst == {"a": 0, "k": 2, "w": 64, "x": Input("x")}


def test_match_term_repeated_var_must_agree():
    t = Engine(EngineInstance.make(OpKind.ADD, W=4), (Input("x"), Input("y")))
    p = PEngine(OpKind.ADD, (("W", ScalarVar("w")),), (TermVar("e"), TermVar("e")))
    assert match_term(p, t) is None
    same = Engine(EngineInstance.make(OpKind.ADD, W=4), (Input("x"), Input("x")))
    assert match_term(p, same) == {"w": 4, "e": Input("x")}


def test_match_term_scalar_predicate():
    p = PEngine(OpKind.RELU, (("W", ScalarVar("w", pred=lambda v: v > 100)),), (TermVar("x"),))
    assert match_term(p, relu(64)) is None
    assert match_term(p, relu(128)) == {"w": 128, "x": Input("x")}


def test_instantiate_term_with_buffer_shape_var():
    p = PBuffer(ScalarVar("s"), TermVar("e"))
    t = instantiate_term(p, {"s": TensorShape((8,)), "e": relu(8)})
    assert t == Buffer(TensorShape((8,)), relu(8))


def test_ematch_buffer_pattern_binds_shape():
    w = infer_shapes(parse_workload("(workload (input x (128)) (output (relu x)))"))
    g = EGraph(w.inputs)
    g.add_term(lower(w))
    matches = g.ematch(parse_pattern("(buffer ?s ?e)"))
    assert len(matches) == 1
    assert matches[0][1]["s"] == TensorShape((128,))


def test_ematch_concrete_input_pattern():
    w = infer_shapes(parse_workload("(workload (input x (128)) (output (relu x)))"))
    g = EGraph(w.inputs)
    g.add_term(lower(w))
    assert len(g.ematch(parse_pattern("(engine relu (W 128) x)"))) == 1
    assert g.ematch(parse_pattern("(engine relu (W 128) y)")) == []
