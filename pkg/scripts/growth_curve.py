#!/usr/bin/env python3
"""Sweep relu widths 2^k and tabulate how the design space grows.

The point of the experiment: the number of representable designs grows
exponentially in k while the e-graph itself stays quadratic.

    python3 scripts/growth_curve.py --max-k 12
"""

import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from enginespace import EGraph, builtin_rules, infer_shapes, lower, parse_workload, run


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--max-k", type=int, default=12)
    ap.add_argument("--max-depth", type=int, default=40)
    ap.add_argument("--rules", default="all", choices=["all", "pow2"])
    args = ap.parse_args()

    print(f"{'k':>3} {'width':>6} {'iters':>5} {'nodes':>7} {'classes':>8} "
          f"{'designs':>24} {'time_s':>7}")
    for k in range(1, args.max_k + 1):
        width = 2**k
        w = infer_shapes(parse_workload(f"(workload (input x ({width})) (output (relu x)))"))
        g = EGraph(w.inputs)
        root = g.add_term(lower(w))
        t0 = time.monotonic()
        report = run(g, builtin_rules("pow2" if args.rules == "pow2" else "all"))
        count = g.count_terms(g.find(root), args.max_depth)
        dt = time.monotonic() - t0
        print(f"{k:>3} {width:>6} {report.iterations:>5} {g.num_nodes:>7} "
              f"{g.num_classes:>8} {count:>24} {dt:>7.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
