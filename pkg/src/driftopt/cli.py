"""Command-line front end.

Subcommands: solve (run a solver, emit a CSV trace plus a JSON summary),
fit (decay-rate fit over a trace CSV), audit (check convergence guarantees
over a trace), kkt (print the ground-truth solution), info (list built-in
problems).

Exit codes: 0 success, 2 usage or parse error, 3 numerical failure.
All output is deterministic; CSV numbers carry 17 significant digits so
doubles round-trip exactly.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .core import IterateTrace, TraceSample
from .diagnostics import audit_bounds, audit_passed, fit_geometric, fit_power_decay
from .oracles import InnerSolveError
from .problems import BUILTIN_TAGS, ProblemBundle, builtin, load_problem
from .reference import InfeasibleError
from .solver import SolverConfig, choose_V, run

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

ALGORITHMS = {"dpp": "dpp", "dpp-shifted": "dpp_shifted",
              "dual-subgradient": "dual_subgradient"}


def _fmt(v) -> str:
    if v is None:
        return ""
    return f"{float(v):.17g}"


def _load_bundle(args) -> ProblemBundle:
    if getattr(args, "builtin", None):
        return builtin(args.builtin)
    return load_problem(args.problem)


def _add_problem_source(parser: argparse.ArgumentParser) -> None:
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", choices=BUILTIN_TAGS,
                     help="built-in problem tag")
    src.add_argument("--problem", help="path to a JSON problem file")


def _parse_q0(text: str | None, m: int) -> np.ndarray:
    if text is None:
        return np.zeros(m)
    parts = [float(p) for p in text.split(",")]
    if len(parts) == 1:
        return np.full(m, parts[0])
    if len(parts) != m:
        raise ValueError(f"--q0 needs 1 or {m} comma-separated values")
    return np.array(parts)


def _parse_sampling(text: str) -> tuple[str, int]:
    if text == "log":
        return "log", 1
    if text.startswith("linear"):
        stride = 1
        if ":" in text:
            stride = int(text.split(":", 1)[1])
        if stride < 1:
            raise ValueError("linear sampling stride must be >= 1")
        return "linear", stride
    raise ValueError("--sample must be 'log' or 'linear[:<stride>]'")


def _write_csv(path: Path, trace: IterateTrace, bundle: ProblemBundle) -> None:
    m = bundle.program.m
    has_ref = bundle.reference is not None
    header = ["t", "f_avg", "f_err"] + [f"g_{k + 1}" for k in range(m)] + ["qnorm"]
    if has_ref:
        header += ["lambda_dist", "dual_gap"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for s in trace.samples:
            f_err = abs(s.f_xbar - bundle.reference.f_star) if has_ref else None
            row = [str(s.t), _fmt(s.f_xbar), _fmt(f_err)]
            row += [_fmt(v) for v in s.g_xbar]
            row.append(_fmt(s.qnorm))
            if has_ref:
                row += [_fmt(s.lambda_dist), _fmt(s.dual_gap)]
            writer.writerow(row)


def _summary_path(out: Path) -> Path:
    return out.with_name(out.name + ".summary.json")


def cmd_solve(args) -> int:
    bundle = _load_bundle(args)
    program = bundle.program
    if args.iters < 1:
        print("error: --iters must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        sampling, stride = _parse_sampling(args.sample)
        q0 = _parse_q0(args.q0, program.m)
        V = args.V if args.V is not None else choose_V(program)
        config = SolverConfig(V=V, q0=q0, iters=args.iters,
                              variant=ALGORITHMS[args.algorithm],
                              sampling=sampling, stride=stride)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(args.out)
    try:
        trace = run(program, bundle.oracle, config, reference=bundle.reference)
    except InnerSolveError as exc:
        partial = getattr(exc, "partial_trace", None)
        if partial is not None and len(partial):
            _write_csv(out, partial, bundle)
        print(f"error: inner oracle failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL

    _write_csv(out, trace, bundle)
    last = trace.samples[-1]
    summary = {
        "problem": bundle.tag,
        "algorithm": args.algorithm,
        "V": V,
        "q0": q0.tolist(),
        "iters": args.iters,
        "sampling": args.sample,
        "samples": len(trace),
        "max_drift_residual": trace.max_drift_residual,
        "final": {
            "t": int(last.t),
            "f_avg": last.f_xbar,
            "f_err": (abs(last.f_xbar - bundle.reference.f_star)
                      if bundle.reference is not None else None),
            "max_violation": float(np.maximum(last.g_xbar, 0.0).max()),
            "qnorm": last.qnorm,
            "lambda_dist": last.lambda_dist,
            "dual_gap": last.dual_gap,
        },
    }
    with open(_summary_path(out), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def _read_trace_csv(path: Path):
    """Parse a solve CSV back into aligned numpy columns."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise ValueError("trace CSV is empty")
    header, data = rows[0], rows[1:]
    if not data:
        raise ValueError("trace CSV has no data rows")
    ncol = len(header)
    if any(len(r) != ncol for r in data):
        raise ValueError("trace CSV is malformed (ragged rows)")
    cols = {}
    for j, name in enumerate(header):
        vals = [r[j] for r in data]
        if any(v == "" for v in vals):
            cols[name] = None
        else:
            cols[name] = np.array([float(v) for v in vals])
    return header, cols


def cmd_fit(args) -> int:
    path = Path(args.trace)
    try:
        header, cols = _read_trace_csv(path)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read trace: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if "t" not in cols:
        print("error: trace CSV lacks a 't' column", file=sys.stderr)
        return EXIT_USAGE
    ts = cols["t"]
    if args.series == "obj":
        if cols.get("f_err") is None:
            print("error: trace CSV lacks an 'f_err' column", file=sys.stderr)
            return EXIT_USAGE
        errors = cols["f_err"]
    else:
        gcols = [name for name in header if name.startswith("g_")]
        if not gcols:
            print("error: trace CSV lacks g_k columns", file=sys.stderr)
            return EXIT_USAGE
        stacked = np.stack([cols[name] for name in gcols], axis=1)
        errors = np.maximum(stacked, 0.0).max(axis=1)
    window = None
    if args.t_lo is not None or args.t_hi is not None:
        window = (args.t_lo if args.t_lo is not None else float(ts.min()),
                  args.t_hi if args.t_hi is not None else float(ts.max()))
    try:
        fit_fn = fit_power_decay if args.model == "power" else fit_geometric
        fit = fit_fn(ts, errors, window_fraction=args.window_fraction,
                     window=window)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps(fit.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_audit(args) -> int:
    bundle = _load_bundle(args)
    path = Path(args.trace)
    summary_path = Path(args.summary) if args.summary else _summary_path(path)
    try:
        header, cols = _read_trace_csv(path)
        with open(summary_path) as fh:
            summary = json.load(fh)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: cannot read trace/summary: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if bundle.reference is None:
        print("error: no ground-truth solution for this problem", file=sys.stderr)
        return EXIT_NUMERICAL

    m = bundle.program.m
    gcols = [f"g_{k + 1}" for k in range(m)]
    needed = ["t", "f_avg", "qnorm"] + gcols
    if any(cols.get(name) is None for name in needed):
        print("error: trace CSV lacks required columns", file=sys.stderr)
        return EXIT_USAGE

    # Rebuild a trace carrying the columns the audits read.
    trace = IterateTrace(V=float(summary["V"]), variant="dpp",
                         iters=int(summary["iters"]))
    n = bundle.program.n
    have_dual = cols.get("lambda_dist") is not None and cols.get("dual_gap") is not None
    for i, t in enumerate(cols["t"]):
        trace.append(TraceSample(
            t=int(t), x=np.zeros(n), xbar=np.zeros(n), queue=np.zeros(m),
            f_xbar=float(cols["f_avg"][i]),
            g_xbar=np.array([cols[name][i] for name in gcols]),
            qnorm=float(cols["qnorm"][i]),
            lambda_dist=float(cols["lambda_dist"][i]) if have_dual else None,
            dual_gap=float(cols["dual_gap"][i]) if have_dual else None))

    config = SolverConfig(V=trace.V, q0=np.array(summary["q0"], dtype=float),
                          iters=max(trace.iters, 1))
    gamma = args.gamma if args.gamma is not None else bundle.constant("gamma")
    report = audit_bounds(trace, bundle.reference, bundle.program, config,
                          gamma=gamma, oracle=bundle.oracle)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK if audit_passed(report) else 1


def cmd_kkt(args) -> int:
    bundle = _load_bundle(args)
    if bundle.reference is None:
        print(f"error: ground-truth solve failed: {bundle.reference_error}",
              file=sys.stderr)
        return EXIT_NUMERICAL
    ref = bundle.reference
    doc = {
        "problem": bundle.tag,
        "x_star": ref.x_star.tolist(),
        "f_star": ref.f_star,
        "lambda_star": ref.lambda_star.tolist(),
        # 1-based, matching the g_1..g_m CSV column naming
        "active_constraints": [k + 1 for k in ref.active_set],
        "slack_constraints": [k + 1 for k in range(bundle.program.m)
                              if k not in ref.active_set],
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_info(args) -> int:
    docs = []
    for tag in BUILTIN_TAGS:
        b = builtin(tag)
        docs.append({
            "tag": tag, "kind": b.kind,
            "n": b.program.n, "m": b.program.m,
            "constants": [{"name": c.name, "value": c.value, "source": c.source}
                          for c in b.constants],
            "default_V": choose_V(b.program),
            "has_reference": b.reference is not None,
        })
    print(json.dumps(docs, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="driftopt",
        description="Constrained convex optimization via drift-plus-penalty "
                    "and dual subgradient methods")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run a solver and write a CSV trace")
    _add_problem_source(p)
    p.add_argument("--algorithm", choices=sorted(ALGORITHMS), default="dpp")
    p.add_argument("--V", type=float, default=None,
                   help="penalty parameter (default: guarantee threshold)")
    p.add_argument("--q0", default=None,
                   help="initial queue: scalar or comma-separated vector (default 0)")
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--sample", default="log",
                   help="'log' or 'linear[:<stride>]' (default log)")
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("fit", help="fit a decay model to a trace CSV")
    p.add_argument("--trace", required=True)
    p.add_argument("--series", choices=("obj", "constraint"), required=True)
    p.add_argument("--model", choices=("power", "geometric"), required=True)
    p.add_argument("--window-fraction", type=float, default=0.5)
    p.add_argument("--t-lo", type=float, default=None)
    p.add_argument("--t-hi", type=float, default=None)
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("audit", help="audit convergence guarantees on a trace")
    _add_problem_source(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--summary", default=None,
                   help="JSON run summary (default: <trace>.summary.json)")
    p.add_argument("--gamma", type=float, default=None,
                   help="dual smoothness modulus override")
    p.set_defaults(fn=cmd_audit)

    p = sub.add_parser("kkt", help="print the ground-truth solution")
    _add_problem_source(p)
    p.set_defaults(fn=cmd_kkt)

    p = sub.add_parser("info", help="list built-in problems")
    p.set_defaults(fn=cmd_info)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0,) else 0
    try:
        return args.fn(args)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
