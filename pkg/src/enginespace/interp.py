"""Reference semantics for workloads and schedule terms.

Values are int64 numpy arrays, so design/workload comparisons are exact with
no tolerances. Keep random inputs within |x| <= 2**20 and tensors within
2**10 elements and the int64 accumulators cannot overflow.

`eval_term` gives schedules their operational meaning: a Seq/Par chain over
an engine partitions the kernel's output; each chunk is produced by running
the engine on the matching slice of the (fully materialized) arguments.
Elementwise kinds chunk over the row-major flattened data; matmul splits
rows of the left operand (axis 0) or columns of the right (axis 1); conv2d
splits output rows/columns and reads the overlapping input halo of
chunk + K - 1. Buffers are materialized once and reused across chunks.
"""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from .engine_ir import (
    SPLIT_AXES,
    Buffer,
    Engine,
    Input,
    Par,
    ScheduleTerm,
    Seq,
    axis_extent,
    kernel_out_shape,
    schedule_chain,
)
from .errors import (
    DivisibilityError,
    InvalidScheduleError,
    ParamShapeMismatchError,
    ShapeMismatchError,
    UnboundInputError,
)
from .workload import OpKind, TensorShape, Workload

TensorValue = np.ndarray


def tensor(shape: TensorShape | tuple[int, ...], data) -> TensorValue:
    dims = shape.dims if isinstance(shape, TensorShape) else tuple(shape)
    arr = np.asarray(data, dtype=np.int64).reshape(dims)
    return arr


def value_shape(v: TensorValue) -> TensorShape:
    return TensorShape(tuple(int(d) for d in v.shape))


def load_tensor(path: str | Path) -> TensorValue:
    """Read a JSON tensor file: {"shape": [...], "data": [...]}."""
    import json

    with open(path) as f:
        obj = json.load(f)
    return tensor(tuple(obj["shape"]), obj["data"])


def save_tensor(path: str | Path, v: TensorValue) -> None:
    import json

    with open(path, "w") as f:
        json.dump({"shape": list(v.shape), "data": [int(x) for x in v.reshape(-1)]}, f)


def load_tensor_dir(directory: str | Path) -> dict[str, TensorValue]:
    """Read every *.json tensor in a directory, keyed by file stem."""
    out = {}
    for p in sorted(Path(directory).glob("*.json")):
        out[p.stem] = load_tensor(p)
    return out


def _relu(x):
    return np.maximum(x, 0)


def _conv2d(data: TensorValue, kernel: TensorValue) -> TensorValue:
    # valid convolution, stride 1: windows are (B, C, Ho, Wo, Kh, Kw)
    kh, kw = kernel.shape[2], kernel.shape[3]
    windows = np.lib.stride_tricks.sliding_window_view(data, (kh, kw), axis=(2, 3))
    return np.einsum("bchwij,ocij->bohw", windows, kernel, dtype=np.int64)


def _apply_kernel(kind: OpKind, args: list[TensorValue]) -> TensorValue:
    if kind is OpKind.RELU:
        return _relu(args[0])
    if kind is OpKind.ADD:
        return args[0] + args[1]
    if kind is OpKind.MATMUL:
        return args[0] @ args[1]
    return _conv2d(args[0], args[1])


def eval_workload(w: Workload, inputs: Mapping[str, TensorValue]) -> TensorValue:
    """Ground-truth evaluation of a workload DAG."""
    values: dict[str, TensorValue] = {}
    for name, shape in w.inputs.items():
        if name not in inputs:
            raise UnboundInputError(f"missing input {name!r}")
        v = np.asarray(inputs[name], dtype=np.int64)
        if tuple(v.shape) != shape.dims:
            raise ShapeMismatchError(f"input {name!r} has shape {v.shape}, expected {shape}")
        values[name] = v
    for n in w.nodes:
        values[n.id] = _apply_kernel(n.kind, [values[a] for a in n.args])
    return values[w.output]


def eval_term(
    t: ScheduleTerm,
    env: Mapping[str, TensorValue],
    chunk_order: Callable[[int], list[int]] | None = None,
) -> TensorValue:
    """Evaluate a design. Functionally, Par chunks equal Seq chunks; the
    optional ``chunk_order`` hook only reorders when chunks are computed
    (results are placed by index, so any order gives the same value)."""
    order = chunk_order if chunk_order is not None else lambda k: list(range(k))
    cache: dict[ScheduleTerm, TensorValue] = {}

    def materialize(term: ScheduleTerm) -> TensorValue:
        if term in cache:
            return cache[term]
        if isinstance(term, Input):
            if term.name not in env:
                raise UnboundInputError(f"input {term.name!r} is not bound")
            v = np.asarray(env[term.name], dtype=np.int64)
        elif isinstance(term, Buffer):
            v = materialize(term.child)
            if value_shape(v) != term.shape:
                raise ShapeMismatchError(f"buffer shape {term.shape} != value {v.shape}")
        elif isinstance(term, (Engine, Seq, Par)):
            v = eval_region(term)
        else:
            raise TypeError(f"not a term: {term!r}")
        cache[term] = v
        return v

    def eval_region(region: ScheduleTerm) -> TensorValue:
        chain, engine = schedule_chain(region)
        kind = engine.inst.kind
        for arg in engine.children:
            if isinstance(arg, (Engine, Seq, Par)):
                raise InvalidScheduleError(
                    "engine output must pass through a buffer before feeding another engine"
                )
        args = [materialize(a) for a in engine.children]
        arg_shapes = [value_shape(a) for a in args]
        full = kernel_out_shape(kind, arg_shapes)

        def go(i: int, sel: dict[int, tuple[int, int]]):
            # sel: split axis -> (offset, size) within the full output
            if i == len(chain):
                return run_engine(engine, args, full, sel)
            _, axis, factor = chain[i]
            off, size = sel[axis]
            if size % factor != 0:
                raise DivisibilityError(axis, factor, size)
            step = size // factor
            parts: list[TensorValue | None] = [None] * factor
            for j in order(factor):
                sub = dict(sel)
                sub[axis] = (off + j * step, step)
                parts[j] = go(i + 1, sub)
            if kind in (OpKind.RELU, OpKind.ADD):
                return np.concatenate(parts)  # flat
            return np.concatenate(parts, axis=axis)

        init = {axis: (0, axis_extent(kind, full, axis)) for axis in SPLIT_AXES[kind]}
        out = go(0, init)
        if kind in (OpKind.RELU, OpKind.ADD):
            out = out.reshape(full.dims)
        return out

    return materialize(t)


def run_engine(
    engine: Engine,
    args: list[TensorValue],
    full: TensorShape,
    sel: dict[int, tuple[int, int]],
) -> TensorValue:
    """Run one engine invocation on the argument slices selected by ``sel``
    and check the slice extents against the engine's declared size."""
    inst = engine.inst
    kind = inst.kind
    if kind in (OpKind.RELU, OpKind.ADD):
        off, size = sel[0]
        if inst.param("W") != size:
            raise ParamShapeMismatchError(f"{inst} applied to a chunk of {size} elements")
        chunks = [a.reshape(-1)[off : off + size] for a in args]
        return _apply_kernel(kind, chunks)
    if kind is OpKind.MATMUL:
        (moff, msize), (noff, nsize) = sel[0], sel[1]
        if inst.param("M") != msize or inst.param("N") != nsize:
            raise ParamShapeMismatchError(f"{inst} applied to an {msize}x{nsize} tile")
        if inst.param("K") != args[0].shape[1]:
            raise ParamShapeMismatchError(f"{inst} fed a reduction of {args[0].shape[1]}")
        return args[0][moff : moff + msize, :] @ args[1][:, noff : noff + nsize]
    # conv2d: slice the output tile plus the input halo
    (hoff, hsize), (woff, wsize) = sel[2], sel[3]
    khw = inst.param("K")
    if inst.param("H") != hsize or inst.param("W") != wsize:
        raise ParamShapeMismatchError(f"{inst} applied to an {hsize}x{wsize} output tile")
    kernel = args[1]
    if kernel.shape[2] != khw or kernel.shape[3] != khw:
        raise ParamShapeMismatchError(f"{inst} fed a {kernel.shape} kernel")
    data = args[0][:, :, hoff : hoff + hsize + khw - 1, woff : woff + wsize + khw - 1]
    return _conv2d(data, kernel)
