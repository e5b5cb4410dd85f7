"""Batch driver: explore / verify / stats over a workload file.

Exit codes: 0 success (including limit-stops), 1 parse or shape errors,
2 I/O errors, 3 equivalence failure in `verify`.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    design_to_json,
    diversity_metrics,
    extract_extreme,
    sample_designs,
)
from .egraph import EGraph
from .engine_ir import print_term
from .errors import EnginespaceError
from .interp import eval_term, eval_workload
from .lowering import lower
from .rewrites import RunLimits, rules_by_names, run
from .rng import SplitMix64, derive
from .workload import infer_shapes, parse_workload

DEFAULT_RULES = "r1,r2,r3,r4,r5"
INPUT_BOUND = 1 << 20  # random test inputs stay within +-2^20


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("workload", help="path to a workload file")
    p.add_argument("--iters", type=int, default=12, help="max rewrite iterations")
    p.add_argument("--max-nodes", type=int, default=100_000)
    p.add_argument("--max-classes", type=int, default=100_000)
    p.add_argument("--time-budget-s", type=float, default=600.0)
    p.add_argument("--rules", default=DEFAULT_RULES, help="comma-separated rule names")
    p.add_argument("--samples", type=int, default=50, help="designs to sample")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-depth", type=int, default=32, help="term depth bound for counting")
    p.add_argument("--pow2-only", action="store_true", help="restrict split factors to powers of two")
    p.add_argument(
        "--binary-splits", action="store_true", help="restrict split factors to exactly 2"
    )
    p.add_argument("--out", default=None, help="output path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="enginespace", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("explore", help="enumerate the design space and write a JSON report")
    _add_common_flags(sp)
    sp.set_defaults(func=cmd_explore)

    sp = sub.add_parser("verify", help="check sampled designs against the reference semantics")
    _add_common_flags(sp)
    sp.add_argument("--check-inputs", type=int, default=10, help="random inputs per design")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("stats", help="per-iteration growth CSV")
    _add_common_flags(sp)
    sp.set_defaults(func=cmd_stats)
    return p


def _factor_policy(args) -> str:
    if args.binary_splits:
        return "binary"
    if args.pow2_only:
        return "pow2"
    return "all"


def _load_workload(args):
    text = Path(args.workload).read_text()
    return infer_shapes(parse_workload(text))


def _saturate(args, w, observer=None):
    g = EGraph(w.inputs)
    root = g.add_term(lower(w))
    rules = rules_by_names([r for r in args.rules.split(",") if r], _factor_policy(args))
    limits = RunLimits(
        max_iterations=args.iters,
        max_nodes=args.max_nodes,
        max_classes=args.max_classes,
        time_budget_s=args.time_budget_s,
    )
    if observer is not None:
        report = run(g, rules, limits, observer=lambda gr, i: observer(gr, i, gr.find(root)))
    else:
        report = run(g, rules, limits)
    return g, g.find(root), report


def _config_json(args) -> dict:
    return {
        "flags": {
            "iters": args.iters,
            "max_nodes": args.max_nodes,
            "max_classes": args.max_classes,
            "time_budget_s": args.time_budget_s,
            "rules": [r for r in args.rules.split(",") if r],
            "samples": args.samples,
            "max_depth": args.max_depth,
            "factor_policy": _factor_policy(args),
        },
        "seed": args.seed,
        "version": __version__,
    }


def _build_report(args, w) -> dict:
    g, root, rr = _saturate(args, w)
    count = g.count_terms(root, args.max_depth)
    samples = (
        sample_designs(g, root, args.samples, args.seed, args.max_depth)
        if args.samples > 0
        else []
    )
    extremes = {
        "min_area": extract_extreme(g, root, "min_area"),
        "min_latency": extract_extreme(g, root, "min_latency"),
    }
    # diversity is judged over everything the report exhibits: the uniform
    # samples plus the two extracted extremes
    diversity = diversity_metrics(samples + list(extremes.values()))
    return {
        "workload": {
            "name": Path(args.workload).stem,
            "ops": [n.kind.value for n in w.nodes],
            "inputs": {name: list(shape.dims) for name, shape in w.inputs.items()},
        },
        "run": {
            "iterations": rr.iterations,
            "saturated": rr.saturated,
            "stop_reason": rr.stop_reason,
            "nodes": rr.nodes,
            "classes": rr.classes,
        },
        "space": {"root_count": count, "max_depth": args.max_depth},
        "samples": [design_to_json(p) for p in samples],
        "diversity": diversity,
        "extremes": {k: design_to_json(v) for k, v in extremes.items()},
        "config": _config_json(args),
    }, samples


def _emit(args, text: str) -> None:
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def render_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def cmd_explore(args) -> int:
    w = _load_workload(args)
    report, _ = _build_report(args, w)
    _emit(args, render_report(report))
    return 0


def _random_env(w, seed: int) -> dict:
    rng = SplitMix64(seed)
    env = {}
    for name, shape in w.inputs.items():
        data = [rng.randint(-INPUT_BOUND, INPUT_BOUND) for _ in range(shape.elements)]
        env[name] = np.asarray(data, dtype=np.int64).reshape(shape.dims)
    return env


def cmd_verify(args) -> int:
    w = _load_workload(args)
    report, samples = _build_report(args, w)
    if args.out:
        Path(args.out).write_text(render_report(report))
    if not samples:
        print("verify: zero designs sampled, nothing to check")
        return 0
    failures = 0
    for di, point in enumerate(samples):
        for ii in range(args.check_inputs):
            input_seed = derive(args.seed, di, ii)
            env = _random_env(w, input_seed)
            expect = eval_workload(w, env)
            try:
                got = eval_term(point.term, env)
                ok = bool(np.array_equal(expect, got))
            except EnginespaceError as e:
                got, ok = None, False
                print(f"verify: design {di} input {ii} raised: {e}", file=sys.stderr)
            if not ok:
                failures += 1
                print("verify: COUNTEREXAMPLE", file=sys.stderr)
                print(f"  design[{di}] = {print_term(point.term)}", file=sys.stderr)
                print(f"  input seed = {input_seed} (derived from --seed {args.seed})", file=sys.stderr)
                if got is not None:
                    diff = np.argwhere(expect != got)
                    at = tuple(int(x) for x in diff[0])
                    print(
                        f"  first mismatch at {at}: expected {expect[at]}, got {got[at]}",
                        file=sys.stderr,
                    )
                break  # one counterexample per design is enough
    checks = len(samples) * args.check_inputs
    if failures:
        print(f"verify: {failures}/{len(samples)} designs failed", file=sys.stderr)
        return 3
    print(f"verify: {len(samples)} designs x {args.check_inputs} inputs: all equal ({checks} checks)")
    return 0


def cmd_stats(args) -> int:
    w = _load_workload(args)
    rows = []

    def observer(g, iteration, root):
        rows.append((iteration, g.num_nodes, g.num_classes, g.count_terms(root, args.max_depth)))

    _saturate(args, w, observer=observer)
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["iteration", "nodes", "classes", "count_terms"])
    writer.writerows(rows)
    _emit(args, buf.getvalue())
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except EnginespaceError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
