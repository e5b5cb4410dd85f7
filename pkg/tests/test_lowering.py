from hypothesis import given

from enginespace.engine_ir import (
    Buffer,
    Engine,
    EngineInstance,
    Input,
    Par,
    Seq,
    iter_subterms,
    print_term,
    typecheck_term,
)
from enginespace.lowering import lower
from enginespace.workload import OpKind, infer_shapes, parse_workload

from test_workload import elementwise_workloads


def _lowered(src):
    w = infer_shapes(parse_workload(src))
    return w, lower(w)


def test_lower_relu128():
    _, t = _lowered("(workload (input x (128)) (output (relu x)))")
    assert print_term(t) == "(buffer (128) (engine relu (W 128) x))"


def test_lower_matmul_params():
    _, t = _lowered("(workload (input a (16 16)) (input b (16 16)) (output (matmul a b)))")
    assert isinstance(t, Buffer)
    assert t.child.inst == EngineInstance.make(OpKind.MATMUL, M=16, N=16, K=16)


def test_lower_conv_params_use_output_tile():
    _, t = _lowered(
        "(workload (input d (1 3 18 18)) (input w (8 3 3 3)) (output (conv2d d w)))"
    )
    assert t.child.inst == EngineInstance.make(OpKind.CONV2D, H=16, W=16, C=3, K=3)


def test_lower_chained_relus_nest_buffers():
    _, t = _lowered("(workload (input x (8)) (output (relu (relu x))))")
    expected = Buffer(
        t.shape,
        Engine(
            EngineInstance.make(OpKind.RELU, W=8),
            (Buffer(t.shape, Engine(EngineInstance.make(OpKind.RELU, W=8), (Input("x"),))),),
        ),
    )
    assert t == expected


def test_lower_relu_rank4_flattens_width():
    _, t = _lowered("(workload (input x (1 2 3 4)) (output (relu x)))")
    assert t.child.inst == EngineInstance.make(OpKind.RELU, W=24)


@given(elementwise_workloads())
def test_lower_structure_counts(src):
    w = infer_shapes(parse_workload(src))
    t = lower(w)
    subterms = list(iter_subterms(t))
    engines = [s for s in subterms if isinstance(s, Engine)]
    buffers = [s for s in subterms if isinstance(s, Buffer)]
    assert len(engines) == len(w.nodes)
    assert len(buffers) == len(w.nodes)
    assert not any(isinstance(s, (Seq, Par)) for s in subterms)


@given(elementwise_workloads())
def test_lower_typechecks_to_output_shape(src):
    w = infer_shapes(parse_workload(src))
    assert typecheck_term(lower(w), w.inputs) == w.output_shape


def test_lower_typechecks_conv_and_matmul():
    for src in (
        "(workload (input a (16 16)) (input b (16 16)) (output (matmul a b)))",
        "(workload (input d (1 3 18 18)) (input w (8 3 3 3)) (output (conv2d d w)))",
    ):
        w, t = _lowered(src)
        assert typecheck_term(t, w.inputs) == w.output_shape
