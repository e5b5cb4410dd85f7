"""enginespace: enumerate hardware-software splits of tensor workloads.

A small workload language is lowered to a term IR with explicit hardware
engines, software schedules (loops / spatial replication), and storage
buffers; an e-graph plus a rewrite catalog then enumerates the functionally
equivalent designs, with exact counting, uniform sampling, cost proxies,
and an interpreter to verify equivalence.
"""

__version__ = "0.1.0"

from .analysis import (
    CostMetrics,
    DesignPoint,
    cost_metrics,
    design_point,
    diversity_metrics,
    extract_extreme,
    sample_designs,
)
from .egraph import EGraph, ENode, enode_to_term
from .engine_ir import (
    Buffer,
    Engine,
    EngineDecl,
    EngineInstance,
    Input,
    Par,
    ScheduleTerm,
    Seq,
    hardware_inventory,
    parse_term,
    print_term,
    typecheck_term,
)
from .errors import (
    AnalysisConflictError,
    DivisibilityError,
    EmptyClassError,
    EnginespaceError,
    ParamShapeMismatchError,
    ParseError,
    RankError,
    ShapeMismatchError,
    UnboundInputError,
)
from .interp import TensorValue, eval_term, eval_workload, load_tensor, load_tensor_dir
from .lowering import lower
from .rewrites import Rewrite, RunLimits, RunReport, apply_rewrite, builtin_rules, rules_by_names, run
from .workload import OpKind, TensorShape, Workload, infer_shapes, parse_workload, print_workload

__all__ = [
    "AnalysisConflictError",
    "Buffer",
    "CostMetrics",
    "DesignPoint",
    "DivisibilityError",
    "EGraph",
    "ENode",
    "EmptyClassError",
    "Engine",
    "EngineDecl",
    "EngineInstance",
    "EnginespaceError",
    "Input",
    "OpKind",
    "Par",
    "ParamShapeMismatchError",
    "ParseError",
    "RankError",
    "Rewrite",
    "RunLimits",
    "RunReport",
    "ScheduleTerm",
    "Seq",
    "ShapeMismatchError",
    "TensorShape",
    "TensorValue",
    "UnboundInputError",
    "Workload",
    "apply_rewrite",
    "builtin_rules",
    "cost_metrics",
    "design_point",
    "diversity_metrics",
    "enode_to_term",
    "eval_term",
    "eval_workload",
    "extract_extreme",
    "hardware_inventory",
    "infer_shapes",
    "load_tensor",
    "load_tensor_dir",
    "lower",
    "parse_term",
    "parse_workload",
    "print_term",
    "print_workload",
    "rules_by_names",
    "run",
    "sample_designs",
    "typecheck_term",
]
