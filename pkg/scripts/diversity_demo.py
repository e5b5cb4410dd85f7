#!/usr/bin/env python3
"""Explore a conv2d -> relu -> add pipeline and show the spread of designs:
the all-hardware seed, the minimal-hardware deep-loop point, and a uniform
sample in between.

    python3 scripts/diversity_demo.py --samples 200 --seed 7
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from enginespace import (
    EGraph,
    builtin_rules,
    infer_shapes,
    lower,
    parse_workload,
    print_term,
    run,
)
from enginespace.analysis import (
    design_point,
    diversity_metrics,
    extract_extreme,
    sample_designs,
)

WORKLOAD = """
(workload
  (input d (1 3 18 18))     ; NCHW activations
  (input w (8 3 3 3))       ; OCHW weights
  (input b (1 8 16 16))     ; bias-like addend
  (output (add (relu (conv2d d w)) b)))
"""


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--max-depth", type=int, default=32)
    args = ap.parse_args()

    w = infer_shapes(parse_workload(WORKLOAD))
    seed_design = design_point(lower(w))
    g = EGraph(w.inputs)
    root = g.add_term(lower(w))
    report = run(g, builtin_rules())
    root = g.find(root)

    print(f"saturated={report.saturated} after {report.iterations} iterations; "
          f"{g.num_nodes} nodes / {g.num_classes} classes")
    print(f"designs represented (depth <= {args.max_depth}): "
          f"{g.count_terms(root, args.max_depth)}")
    print(f"\nseed (engine per kernel invocation): area={seed_design.cost.area_proxy} "
          f"latency={seed_design.cost.latency_proxy}")

    for objective in ("min_area", "min_latency"):
        p = extract_extreme(g, root, objective)
        print(f"\n{objective}: area={p.cost.area_proxy} latency={p.cost.latency_proxy}")
        print(f"  {print_term(p.term)}")

    points = sample_designs(g, root, args.samples, args.seed, args.max_depth)
    d = diversity_metrics(points + [extract_extreme(g, root, o) for o in ("min_area", "min_latency")])
    print(f"\ndiversity over {d['num_designs']} designs:")
    for key in ("distinct_inventories", "has_engine_per_invocation_design",
                "has_minimal_hardware_design"):
        print(f"  {key}: {d[key]}")
    for metric in ("area_proxy", "latency_proxy", "engine_count"):
        s = d[metric]
        print(f"  {metric}: min={s['min']} median={s['median']} max={s['max']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
