"""The equality graph over schedule terms.

E-nodes carry an operator head (with embedded scalars: engine instance,
axis/factor, buffer shape, input name) plus e-class children. Classes are
merged through a union-find; congruence is restored by an explicit
`rebuild` after a batch of unions, which is the cheap discipline for
rewrite loops.

Every class carries a shape analysis: the full output extents of the value
it computes. Merging classes with different shapes raises
AnalysisConflictError, which is how an unsound rewrite announces itself.
A class additionally remembers the kernel kind its schedules compute when
that is unambiguous; it is used for split sanity checks only and joins to
None instead of conflicting.

Mutation (add/union/rebuild) is single-writer; read-only queries (ematch,
count_terms) may run concurrently with each other after a rebuild.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Optional

from .engine_ir import (
    SPLIT_AXES,
    Buffer,
    Engine,
    EngineInstance,
    Input,
    Par,
    ScheduleTerm,
    Seq,
    axis_extent,
    kernel_out_shape,
)
from .errors import (
    AnalysisConflictError,
    DivisibilityError,
    InvalidScheduleError,
    ShapeMismatchError,
    UnboundInputError,
)
from .patterns import (
    PBuffer,
    PEngine,
    PInput,
    PPar,
    PSeq,
    Pattern,
    ScalarVar,
    Subst,
    TermVar,
    bind_scalar,
)
from .workload import OpKind, TensorShape


@dataclass(frozen=True)
class ENode:
    """Operator head plus e-class children. Heads are one of
    ("input", name), ("engine", inst), ("seq", axis, factor),
    ("par", axis, factor), ("buffer", shape)."""

    head: tuple
    children: tuple[int, ...]


class EClass:
    __slots__ = ("id", "nodes", "parents", "shape", "kind")

    def __init__(self, cid: int, shape: TensorShape, kind: Optional[OpKind]):
        self.id = cid
        self.nodes: dict[ENode, None] = {}
        self.parents: dict[ENode, int] = {}
        self.shape = shape
        self.kind = kind


class EGraph:
    def __init__(self, env: Mapping[str, TensorShape]):
        self.env = dict(env)
        self._uf: dict[int, int] = {}
        self.classes: dict[int, EClass] = {}
        self.hashcons: dict[ENode, int] = {}
        self.worklist: list[int] = []
        self._next_id = 0

    # ------------------------------------------------------------------ core

    def find(self, cid: int) -> int:
        root = cid
        while self._uf[root] != root:
            root = self._uf[root]
        while self._uf[cid] != root:  # path compression
            self._uf[cid], cid = root, self._uf[cid]
        return root

    def canonicalize(self, node: ENode) -> ENode:
        return ENode(node.head, tuple(self.find(c) for c in node.children))

    def add(self, node: ENode) -> int:
        """Hashcons-aware insertion; returns the class representing the node."""
        node = self.canonicalize(node)
        if node in self.hashcons:
            return self.find(self.hashcons[node])
        shape, kind = self._analyze(node)
        cid = self._next_id
        self._next_id += 1
        self._uf[cid] = cid
        cls = EClass(cid, shape, kind)
        cls.nodes[node] = None
        self.classes[cid] = cls
        self.hashcons[node] = cid
        for ch in set(node.children):
            self.classes[self.find(ch)].parents[node] = cid
        return cid

    def add_term(self, t: ScheduleTerm) -> int:
        if isinstance(t, Input):
            return self.add(ENode(("input", t.name), ()))
        if isinstance(t, Engine):
            children = tuple(self.add_term(c) for c in t.children)
            return self.add(ENode(("engine", t.inst), children))
        if isinstance(t, Seq):
            return self.add(ENode(("seq", t.axis, t.factor), (self.add_term(t.child),)))
        if isinstance(t, Par):
            return self.add(ENode(("par", t.axis, t.factor), (self.add_term(t.child),)))
        return self.add(ENode(("buffer", t.shape), (self.add_term(t.child),)))

    def union(self, a: int, b: int) -> tuple[int, bool]:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra, False
        ca, cb = self.classes[ra], self.classes[rb]
        if ca.shape != cb.shape:
            raise AnalysisConflictError(
                f"merging classes with shapes {ca.shape} and {cb.shape}"
            )
        # keep the larger side as representative; break ties toward older id
        if (len(cb.nodes) + len(cb.parents), -rb) > (len(ca.nodes) + len(ca.parents), -ra):
            ra, rb, ca, cb = rb, ra, cb, ca
        self._uf[rb] = ra
        ca.nodes.update(cb.nodes)
        ca.parents.update(cb.parents)
        if ca.kind != cb.kind:
            ca.kind = None
        del self.classes[rb]
        self.worklist.append(ra)
        return ra, True

    def rebuild(self) -> int:
        """Restore congruence and hashcons invariants; returns repairs done."""
        repairs = 0
        while True:
            while self.worklist:
                todo, seen = [], set()
                for c in self.worklist:
                    r = self.find(c)
                    if r not in seen:
                        seen.add(r)
                        todo.append(r)
                self.worklist = []
                for c in todo:
                    repairs += 1
                    self._repair(c)
            if not self._canonize_nodes():
                return repairs

    def _repair(self, cid: int) -> None:
        cid = self.find(cid)
        cls = self.classes[cid]
        parents = list(cls.parents.items())
        for pnode, pcid in parents:
            self.hashcons.pop(pnode, None)
            self.hashcons[self.canonicalize(pnode)] = self.find(pcid)
        new_parents: dict[ENode, int] = {}
        for pnode, pcid in parents:
            canon = self.canonicalize(pnode)
            if canon in new_parents:
                self.union(pcid, new_parents[canon])
            new_parents[canon] = self.find(pcid)
        live = self.classes[self.find(cid)]
        if live is cls:
            cls.parents = new_parents
        else:
            live.parents.update(new_parents)

    def _canonize_nodes(self) -> bool:
        """Re-canonicalize node sets and rebuild the hashcons; returns True if
        a lingering congruent pair forced more unions."""
        changed = False
        hc: dict[ENode, int] = {}
        for cid in list(self.classes.keys()):
            if cid not in self.classes:
                continue
            cls = self.classes[cid]
            new_nodes: dict[ENode, None] = {}
            for node in cls.nodes:
                new_nodes[self.canonicalize(node)] = None
            cls.nodes = new_nodes
            for node in new_nodes:
                other = hc.get(node)
                if other is not None and self.find(other) != self.find(cid):
                    self.union(other, cid)
                    changed = True
                hc[node] = self.find(cid)
        if not changed:
            self.hashcons = hc
        return changed

    # ------------------------------------------------------------- analysis

    def shape_of(self, cid: int) -> TensorShape:
        return self.classes[self.find(cid)].shape

    def kind_of(self, cid: int) -> Optional[OpKind]:
        return self.classes[self.find(cid)].kind

    def _analyze(self, node: ENode) -> tuple[TensorShape, Optional[OpKind]]:
        tag = node.head[0]
        if tag == "input":
            name = node.head[1]
            if name not in self.env:
                raise UnboundInputError(f"input {name!r} is not bound")
            return self.env[name], None
        if tag == "buffer":
            shape: TensorShape = node.head[1]
            child_shape = self.shape_of(node.children[0])
            if child_shape != shape:
                raise ShapeMismatchError(f"buffer shape {shape} != child shape {child_shape}")
            return shape, None
        if tag == "engine":
            inst: EngineInstance = node.head[1]
            arg_shapes = [self.shape_of(c) for c in node.children]
            full = kernel_out_shape(inst.kind, arg_shapes)
            for axis, pname in SPLIT_AXES[inst.kind].items():
                extent = axis_extent(inst.kind, full, axis)
                if extent % inst.param(pname) != 0:
                    raise ShapeMismatchError(
                        f"{inst}: parameter {pname}={inst.param(pname)} does not divide "
                        f"the axis-{axis} extent {extent}"
                    )
            if inst.kind is OpKind.MATMUL and inst.param("K") != arg_shapes[0].dims[1]:
                raise ShapeMismatchError(f"{inst}: K must equal {arg_shapes[0].dims[1]}")
            if inst.kind is OpKind.CONV2D:
                kernel = arg_shapes[1]
                if kernel.dims[2] != kernel.dims[3]:
                    raise ShapeMismatchError(f"conv2d engines require square kernels: {kernel}")
                if inst.param("C") != kernel.dims[1] or inst.param("K") != kernel.dims[2]:
                    raise ShapeMismatchError(f"{inst}: C/K must match kernel {kernel}")
            return full, inst.kind
        # seq / par
        axis, factor = node.head[1], node.head[2]
        child = self.find(node.children[0])
        shape = self.shape_of(child)
        kind = self.kind_of(child)
        if kind is not None:
            if axis not in SPLIT_AXES[kind]:
                raise InvalidScheduleError(f"{kind} has no split axis {axis}")
            extent = axis_extent(kind, shape, axis)
            if extent % factor != 0:
                raise DivisibilityError(axis, factor, extent)
        return shape, kind

    # ------------------------------------------------------------- queries

    @property
    def num_classes(self) -> int:
        return len(self.classes)

    @property
    def num_nodes(self) -> int:
        return sum(len(c.nodes) for c in self.classes.values())

    def class_nodes(self, cid: int) -> tuple[ENode, ...]:
        return tuple(self.classes[self.find(cid)].nodes)

    def ematch(self, pattern: Pattern) -> list[tuple[int, Subst]]:
        """All (class, substitution) pairs such that the pattern instantiated
        under the substitution is represented in the class."""
        out: list[tuple[int, Subst]] = []
        seen: set[tuple[int, tuple]] = set()
        for cid, cls in self.classes.items():
            for node in cls.nodes:
                for subst in self._match_node(pattern, node, {}):
                    key = (cid, tuple(sorted((k, _subst_key(v)) for k, v in subst.items())))
                    if key not in seen:
                        seen.add(key)
                        out.append((cid, subst))
        return out

    def _match_node(self, pattern: Pattern, node: ENode, subst: Subst) -> Iterator[Subst]:
        tag = node.head[0]
        if isinstance(pattern, PInput):
            if tag == "input" and node.head[1] == pattern.name:
                yield subst
            return
        if isinstance(pattern, PEngine):
            if tag != "engine" or node.head[1].kind != pattern.kind:
                return
            if len(node.children) != len(pattern.args):
                return
            inst: EngineInstance = node.head[1]
            for pname, pval in pattern.params:
                subst = bind_scalar(pval, inst.param(pname), subst)
                if subst is None:
                    return
            yield from self._match_children(pattern.args, node.children, subst)
            return
        if isinstance(pattern, (PSeq, PPar)):
            want = "seq" if isinstance(pattern, PSeq) else "par"
            if tag != want:
                return
            subst = bind_scalar(pattern.axis, node.head[1], subst)
            if subst is None:
                return
            subst = bind_scalar(pattern.factor, node.head[2], subst)
            if subst is None:
                return
            yield from self._match_children((pattern.child,), node.children, subst)
            return
        if isinstance(pattern, PBuffer):
            if tag != "buffer":
                return
            if isinstance(pattern.shape, ScalarVar):
                subst = bind_scalar(pattern.shape, node.head[1], subst)
                if subst is None:
                    return
            elif pattern.shape != node.head[1]:
                return
            yield from self._match_children((pattern.child,), node.children, subst)
            return
        raise TypeError(f"cannot match {pattern!r} against a node")

    def _match_children(
        self, pats: tuple[Pattern, ...], children: tuple[int, ...], subst: Subst
    ) -> Iterator[Subst]:
        if not pats:
            yield subst
            return
        pat, rest = pats[0], pats[1:]
        cid = self.find(children[0])
        if isinstance(pat, TermVar):
            s = subst
            if pat.name in s:
                if s[pat.name] != cid:
                    return
            else:
                s = dict(s)
                s[pat.name] = cid
            yield from self._match_children(rest, children[1:], s)
            return
        for node in self.classes[cid].nodes:
            for s in self._match_node(pat, node, subst):
                yield from self._match_children(rest, children[1:], s)

    def instantiate(self, pattern: Pattern, subst: Subst) -> int:
        """Add the (scalar-ground) pattern to the graph; term variables must be
        bound to class ids in the substitution."""
        if isinstance(pattern, TermVar):
            return self.find(subst[pattern.name])
        if isinstance(pattern, PInput):
            return self.add(ENode(("input", pattern.name), ()))
        if isinstance(pattern, PEngine):
            params = {
                n: (subst[v.name] if isinstance(v, ScalarVar) else v) for n, v in pattern.params
            }
            inst = EngineInstance.make(pattern.kind, **params)
            children = tuple(self.instantiate(a, subst) for a in pattern.args)
            return self.add(ENode(("engine", inst), children))
        if isinstance(pattern, (PSeq, PPar)):
            tag = "seq" if isinstance(pattern, PSeq) else "par"
            axis = subst[pattern.axis.name] if isinstance(pattern.axis, ScalarVar) else pattern.axis
            factor = (
                subst[pattern.factor.name]
                if isinstance(pattern.factor, ScalarVar)
                else pattern.factor
            )
            child = self.instantiate(pattern.child, subst)
            return self.add(ENode((tag, axis, factor), (child,)))
        if isinstance(pattern, PBuffer):
            shape = (
                subst[pattern.shape.name]
                if isinstance(pattern.shape, ScalarVar)
                else pattern.shape
            )
            return self.add(ENode(("buffer", shape), (self.instantiate(pattern.child, subst),)))
        raise TypeError(f"not a pattern: {pattern!r}")

    # ------------------------------------------------------------- counting

    def count_table(self, max_depth: int) -> list[dict[int, int]]:
        """table[d][class] = number of distinct terms of depth <= d rooted at
        the class. Exact, arbitrary precision; computed bottom-up over depth."""
        table: list[dict[int, int]] = [{cid: 0 for cid in self.classes}]
        for _ in range(max_depth):
            prev = table[-1]
            cur: dict[int, int] = {}
            for cid, cls in self.classes.items():
                total = 0
                for node in cls.nodes:
                    w = 1
                    for ch in node.children:
                        w *= prev[self.find(ch)]
                        if w == 0:
                            break
                    total += w
                cur[cid] = total
            table.append(cur)
        return table

    def count_terms(self, root: int, max_depth: int) -> int:
        if max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        return self.count_table(max_depth)[max_depth][self.find(root)]


def _subst_key(v):
    return v if isinstance(v, (int, str)) else repr(v)


def enode_to_term(node: ENode, child_terms: Iterable[ScheduleTerm]) -> ScheduleTerm:
    """Rebuild one term level from a node head and already-built children."""
    children = tuple(child_terms)
    tag = node.head[0]
    if tag == "input":
        return Input(node.head[1])
    if tag == "engine":
        return Engine(node.head[1], children)
    if tag == "seq":
        return Seq(node.head[1], node.head[2], children[0])
    if tag == "par":
        return Par(node.head[1], node.head[2], children[0])
    return Buffer(node.head[1], children[0])
