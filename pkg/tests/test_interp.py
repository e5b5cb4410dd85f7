import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from enginespace.engine_ir import Buffer, Engine, EngineInstance, Input, Par, Seq
from enginespace.errors import ParamShapeMismatchError, ShapeMismatchError, UnboundInputError
from enginespace.interp import (
    eval_term,
    eval_workload,
    load_tensor,
    load_tensor_dir,
    save_tensor,
    tensor,
)
from enginespace.lowering import lower
from enginespace.workload import OpKind, TensorShape, infer_shapes, parse_workload

from oracles import brute_conv2d


def _wl(src):
    return infer_shapes(parse_workload(src))


def relu_engine(w, arg=Input("x")):
    return Engine(EngineInstance.make(OpKind.RELU, W=w), (arg,))


# ------------------------------------------------------------ eval_workload


def test_relu_definition():
    w = _wl("(workload (input x (3)) (output (relu x)))")
    out = eval_workload(w, {"x": tensor((3,), [-1, 0, 5])})
    assert out.tolist() == [0, 0, 5]


def test_matmul_identity():
    w = _wl("(workload (input i (2 2)) (input a (2 2)) (output (matmul i a)))")
    a = tensor((2, 2), [3, -4, 5, 6])
    out = eval_workload(w, {"i": np.eye(2, dtype=np.int64), "a": a})
    assert np.array_equal(out, a)


def test_conv_all_ones():
    w = _wl("(workload (input d (1 1 2 2)) (input k (1 1 2 2)) (output (conv2d d k)))")
    out = eval_workload(w, {"d": np.ones((1, 1, 2, 2), np.int64), "k": np.ones((1, 1, 2, 2), np.int64)})
    assert out.shape == (1, 1, 1, 1)
    assert out[0, 0, 0, 0] == 4


@given(st.integers(0, 2**32))
def test_conv_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    d = rng.integers(-50, 50, (2, 3, 6, 5)).astype(np.int64)
    k = rng.integers(-50, 50, (4, 3, 2, 3)).astype(np.int64)
    w = _wl("(workload (input d (2 3 6 5)) (input k (4 3 2 3)) (output (conv2d d k)))")
    assert np.array_equal(eval_workload(w, {"d": d, "k": k}), brute_conv2d(d, k))


def test_eval_workload_rejects_bad_shape():
    w = _wl("(workload (input x (3)) (output (relu x)))")
    with pytest.raises(ShapeMismatchError):
        eval_workload(w, {"x": tensor((4,), [1, 2, 3, 4])})


# ----------------------------------------------------------------- eval_term


def test_chunked_relu():
    t = Seq(0, 2, relu_engine(2))
    out = eval_term(t, {"x": tensor((4,), [-1, 2, -3, 4])})
    assert out.tolist() == [0, 2, 0, 4]


def test_buffer_is_identity_on_value():
    t = relu_engine(4)
    env = {"x": tensor((4,), [-1, 2, -3, 4])}
    assert np.array_equal(
        eval_term(Buffer(TensorShape((4,)), t), env), eval_term(t, env)
    )


def test_unbound_input():
    with pytest.raises(UnboundInputError):
        eval_term(relu_engine(4), {"y": tensor((4,), [1, 2, 3, 4])})


def test_engine_applied_at_wrong_size_is_an_error():
    # forgetting to shrink the engine under a loop must not silently work
    t = Seq(0, 2, relu_engine(4))
    with pytest.raises(ParamShapeMismatchError):
        eval_term(t, {"x": tensor((4,), [1, -2, 3, -4])})


def test_conv_split_reads_halo():
    w = _wl("(workload (input d (1 1 4 4)) (input k (1 1 3 3)) (output (conv2d d k)))")
    rng = np.random.default_rng(3)
    env = {
        "d": rng.integers(-9, 9, (1, 1, 4, 4)).astype(np.int64),
        "k": rng.integers(-9, 9, (1, 1, 3, 3)).astype(np.int64),
    }
    ref = eval_term(lower(w), env)
    split = Seq(
        2, 2, Engine(EngineInstance.make(OpKind.CONV2D, H=1, W=2, C=1, K=3), (Input("d"), Input("k")))
    )
    assert np.array_equal(eval_term(split, env), ref)
    assert np.array_equal(ref, eval_workload(w, env))


def test_matmul_column_split_slices_rhs():
    w = _wl("(workload (input a (4 6)) (input b (6 4)) (output (matmul a b)))")
    rng = np.random.default_rng(5)
    env = {
        "a": rng.integers(-9, 9, (4, 6)).astype(np.int64),
        "b": rng.integers(-9, 9, (6, 4)).astype(np.int64),
    }
    t = Seq(1, 4, Engine(EngineInstance.make(OpKind.MATMUL, M=4, N=1, K=6), (Input("a"), Input("b"))))
    assert np.array_equal(eval_term(t, env), eval_workload(w, env))


def _random_relu_schedule(rng, width):
    """A random Seq/Par chain over one relu engine of the given width."""
    factors = []
    rem = width
    while rem > 1 and rng.random() < 0.7:
        ds = [d for d in range(2, rem + 1) if rem % d == 0]
        k = int(rng.choice(ds))
        factors.append(k)
        rem //= k
    t = relu_engine(rem)
    for k in reversed(factors):
        t = (Seq if rng.random() < 0.5 else Par)(0, k, t)
    return t


def test_par_equals_seq_on_random_schedules():
    rng = np.random.default_rng(11)
    for _ in range(50):
        t = _random_relu_schedule(rng, 24)
        env = {"x": rng.integers(-100, 100, (24,)).astype(np.int64)}

        def flip(term):
            if isinstance(term, Seq):
                return Par(term.axis, term.factor, flip(term.child))
            if isinstance(term, Par):
                return Seq(term.axis, term.factor, flip(term.child))
            return term

        assert np.array_equal(eval_term(t, env), eval_term(flip(t), env))


def test_chunk_order_is_irrelevant():
    rng = np.random.default_rng(13)
    for _ in range(20):
        t = _random_relu_schedule(rng, 24)
        env = {"x": rng.integers(-100, 100, (24,)).astype(np.int64)}
        fwd = eval_term(t, env)
        rev = eval_term(t, env, chunk_order=lambda k: list(range(k - 1, -1, -1)))
        assert np.array_equal(fwd, rev)


def test_lowered_designs_match_reference():
    cases = [
        ("(workload (input x (128)) (output (relu x)))", {"x": (128,)}),
        ("(workload (input a (16 16)) (input b (16 16)) (output (matmul a b)))", None),
        (
            "(workload (input d (1 3 18 18)) (input w (8 3 3 3)) (output (conv2d d w)))",
            None,
        ),
    ]
    rng = np.random.default_rng(17)
    for src, _ in cases:
        w = _wl(src)
        env = {
            name: rng.integers(-1000, 1000, shape.dims).astype(np.int64)
            for name, shape in w.inputs.items()
        }
        assert np.array_equal(eval_term(lower(w), env), eval_workload(w, env))


# -------------------------------------------------------------- tensor files


def test_tensor_json_round_trip(tmp_path):
    v = tensor((2, 3), [1, -2, 3, -4, 5, -6])
    save_tensor(tmp_path / "x.json", v)
    assert np.array_equal(load_tensor(tmp_path / "x.json"), v)


def test_load_tensor_dir(tmp_path):
    save_tensor(tmp_path / "a.json", tensor((2,), [1, 2]))
    save_tensor(tmp_path / "b.json", tensor((1, 2), [3, 4]))
    env = load_tensor_dir(tmp_path)
    assert set(env) == {"a", "b"}
    assert env["b"].shape == (1, 2)
