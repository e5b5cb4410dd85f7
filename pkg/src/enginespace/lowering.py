"""Lower a shape-inferred workload to its seed design.

Each operator call becomes one full-size engine instantiation with a storage
buffer for its output; the seed is the all-hardware point (no loops, no
replication), from which rewrites reach the software-heavy alternatives.
"""

from __future__ import annotations

from .engine_ir import Buffer, Engine, Input, ScheduleTerm, full_size_instance
from .errors import ShapeMismatchError
from .workload import Workload


def lower(w: Workload) -> ScheduleTerm:
    """One Buffer(Engine(...)) per node, in dependency order."""
    terms: dict[str, ScheduleTerm] = {name: Input(name) for name in w.inputs}
    shapes = dict(w.inputs)
    for n in w.nodes:
        if n.out_shape is None:
            raise ShapeMismatchError(f"{n.id}: lower requires a shape-inferred workload")
        arg_shapes = [shapes[a] for a in n.args]
        inst = full_size_instance(n.kind, arg_shapes)
        engine = Engine(inst, tuple(terms[a] for a in n.args))
        terms[n.id] = Buffer(n.out_shape, engine)
        shapes[n.id] = n.out_shape
    return terms[w.output]
